//! Spacetime spec files: a sectioned plain-text `key = value` format.
//!
//! ```text
//! # comment
//! [spacetime]
//! kind = flrw                      # flrw | analytic-foliation | tabulated-foliation
//!
//! [flrw]                           # kind = flrw
//! a = "sqrt(1 + 2*t)"              # scale factor, expression in t
//! K = 1                            # spatial curvature: -1, 0, +1
//! Lambda = "0"                     # optional, expression in t
//! omega = "0"                      # optional equation of state, expression in t
//! periods = 6.2832 6.2832 6.2832   # optional, K = 0 torus periods
//! patch_extent = 0.5               # optional, K != 0 chart width
//!
//! [foliation]                      # kind = analytic-foliation
//! N = "1"                          # lapse, expression in t x y z
//! g11 = "1" ... g33 = "1"          # six metric components
//! Lambda = "0"                     # optional
//! periods = L1 L2 L3               # optional, default 2 pi each
//!
//! [tabulated]                      # kind = tabulated-foliation
//! t_minus/t_zero/t_plus = reals    # uniform, increasing
//! n_minus/n_zero/n_plus = path     # lapse field files
//! g_minus/g_zero/g_plus = path     # metric field files
//! Lambda = 0                       # optional real
//!
//! [analysis]
//! t0 = 0.0                         # required
//! dt = 1e-4                        # optional time step for verification
//! resolution = 16                  # grid points per axis, >= 8
//! tolerance_profile = analytic     # analytic | fd
//! oracle_sources = 16
//! t_range = 0.0 1.0 11             # optional, for `parameters`
//!
//! [bm]                             # optional, for `bm-check`
//! n = 3
//! alpha = 0.0  (beta, gamma alike)
//! u = "1"   v = "0"
//! q11 = "2" ... q33 = "2"
//! ```
//!
//! Expressions must be double-quoted; scalars and paths are bare. All
//! schema violations are collected and reported together with field paths.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::expr::{parse_expression, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    Flrw,
    AnalyticFoliation,
    TabulatedFoliation,
}

impl SpecKind {
    pub fn name(&self) -> &'static str {
        match self {
            SpecKind::Flrw => "flrw",
            SpecKind::AnalyticFoliation => "analytic-foliation",
            SpecKind::TabulatedFoliation => "tabulated-foliation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceProfile {
    Analytic,
    Fd,
}

impl ToleranceProfile {
    pub fn name(&self) -> &'static str {
        match self {
            ToleranceProfile::Analytic => "analytic",
            ToleranceProfile::Fd => "fd",
        }
    }
}

#[derive(Debug)]
pub struct FlrwSection {
    pub a: Expr,
    pub curvature: f64,
    pub lambda: Expr,
    pub omega: Option<Expr>,
    pub periods: [f64; 3],
    pub patch_extent: f64,
}

#[derive(Debug)]
pub struct FoliationSection {
    pub lapse: Expr,
    pub metric: [Expr; 6],
    pub lambda: Expr,
    pub periods: [f64; 3],
}

#[derive(Debug)]
pub struct TabulatedSection {
    pub times: [f64; 3],
    pub lapse_paths: [PathBuf; 3],
    pub metric_paths: [PathBuf; 3],
    pub lambda: f64,
}

#[derive(Debug)]
pub struct BmSection {
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub u: Expr,
    pub v: Expr,
    pub q: [Expr; 6],
}

#[derive(Debug)]
pub struct AnalysisSection {
    pub t0: f64,
    pub dt: Option<f64>,
    pub resolution: usize,
    pub tolerance_profile: ToleranceProfile,
    pub oracle_sources: usize,
    pub t_range: Option<(f64, f64, usize)>,
}

#[derive(Debug)]
pub struct SpacetimeSpec {
    pub kind: SpecKind,
    pub flrw: Option<FlrwSection>,
    pub foliation: Option<FoliationSection>,
    pub tabulated: Option<TabulatedSection>,
    pub bm: Option<BmSection>,
    pub analysis: AnalysisSection,
}

/// All schema violations of one spec file, with field paths.
#[derive(Debug)]
pub struct SpecError {
    pub errors: Vec<String>,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid spec:")?;
        for e in &self.errors {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for SpecError {}

struct RawSpec {
    // section -> key -> (value, consumed)
    sections: BTreeMap<String, BTreeMap<String, (String, std::cell::Cell<bool>)>>,
}

impl RawSpec {
    fn parse(text: &str, errors: &mut Vec<String>) -> Self {
        let mut sections: BTreeMap<String, BTreeMap<String, (String, std::cell::Cell<bool>)>> =
            BTreeMap::new();
        let mut current: Option<String> = None;
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = strip_comment(raw_line).trim().to_string();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = Some(name.trim().to_string());
                sections.entry(name.trim().to_string()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!(
                    "line {}: expected 'key = value' or '[section]'",
                    lineno + 1
                ));
                continue;
            };
            let Some(section) = current.clone() else {
                errors.push(format!(
                    "line {}: key '{}' appears before any [section]",
                    lineno + 1,
                    key.trim()
                ));
                continue;
            };
            let entry = sections.entry(section.clone()).or_default();
            let key = key.trim().to_string();
            if entry.contains_key(&key) {
                errors.push(format!("{section}.{key}: duplicate key"));
            }
            entry.insert(
                key,
                (value.trim().to_string(), std::cell::Cell::new(false)),
            );
        }
        RawSpec { sections }
    }

    fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| {
            s.get(key).map(|(v, used)| {
                used.set(true);
                v.as_str()
            })
        })
    }

    fn unused_keys(&self, known_sections: &[&str]) -> Vec<String> {
        let mut out = Vec::new();
        for (section, keys) in &self.sections {
            if !known_sections.contains(&section.as_str()) {
                out.push(format!("[{section}]: unknown section"));
                continue;
            }
            for (key, (_, used)) in keys {
                if !used.get() {
                    out.push(format!("{section}.{key}: unknown key"));
                }
            }
        }
        out
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, b) in line.bytes().enumerate() {
        match b {
            b'"' => in_quotes = !in_quotes,
            b'#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

struct Reader<'a> {
    raw: &'a RawSpec,
    errors: &'a mut Vec<String>,
}

impl<'a> Reader<'a> {
    fn real(&mut self, section: &str, key: &str) -> Option<f64> {
        let v = self.raw.get(section, key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.errors
                    .push(format!("{section}.{key}: expected a real number, got '{v}'"));
                None
            }
        }
    }

    fn integer(&mut self, section: &str, key: &str) -> Option<u64> {
        let v = self.raw.get(section, key)?;
        match v.parse::<u64>() {
            Ok(x) => Some(x),
            _ => {
                self.errors
                    .push(format!("{section}.{key}: expected an integer, got '{v}'"));
                None
            }
        }
    }

    fn string(&mut self, section: &str, key: &str) -> Option<String> {
        self.raw.get(section, key).map(|s| s.to_string())
    }

    fn expression(&mut self, section: &str, key: &str) -> Option<Expr> {
        let v = self.raw.get(section, key)?;
        let inner = match v.strip_prefix('"').and_then(|s| s.strip_suffix('"')) {
            Some(s) => s,
            None => {
                self.errors.push(format!(
                    "{section}.{key}: expressions must be double-quoted, got '{v}'"
                ));
                return None;
            }
        };
        match parse_expression(inner) {
            Ok(e) => Some(e),
            Err(err) => {
                self.errors.push(format!("{section}.{key}: {err}"));
                None
            }
        }
    }

    fn reals(&mut self, section: &str, key: &str, count: usize) -> Option<Vec<f64>> {
        let v = self.raw.get(section, key)?;
        let parts: Result<Vec<f64>, _> = v.split_whitespace().map(str::parse).collect();
        match parts {
            Ok(xs) if xs.len() == count && xs.iter().all(|x| x.is_finite()) => Some(xs),
            _ => {
                self.errors.push(format!(
                    "{section}.{key}: expected {count} whitespace-separated reals, got '{v}'"
                ));
                None
            }
        }
    }
}

const METRIC_KEYS: [&str; 6] = ["g11", "g12", "g13", "g22", "g23", "g33"];
const METRIC_REJECTED: [&str; 3] = ["g21", "g31", "g32"];
const Q_KEYS: [&str; 6] = ["q11", "q12", "q13", "q22", "q23", "q33"];

/// Parses and validates a spec from text. `base_dir` anchors relative file
/// references of the tabulated kind.
pub fn parse_spec(text: &str, base_dir: &Path) -> Result<SpacetimeSpec, SpecError> {
    let mut errors = Vec::new();
    let raw = RawSpec::parse(text, &mut errors);
    let mut r = Reader {
        raw: &raw,
        errors: &mut errors,
    };

    let kind = match r.string("spacetime", "kind") {
        Some(k) => match k.as_str() {
            "flrw" => Some(SpecKind::Flrw),
            "analytic-foliation" => Some(SpecKind::AnalyticFoliation),
            "tabulated-foliation" => Some(SpecKind::TabulatedFoliation),
            other => {
                r.errors.push(format!(
                    "spacetime.kind: unknown kind '{other}' (flrw | analytic-foliation | tabulated-foliation)"
                ));
                None
            }
        },
        None => {
            r.errors.push("spacetime.kind: missing".to_string());
            None
        }
    };

    // analysis
    let t0 = r.real("analysis", "t0");
    if t0.is_none() && !r.errors.iter().any(|e| e.starts_with("analysis.t0")) {
        r.errors.push("analysis.t0: missing".to_string());
    }
    let dt = r.real("analysis", "dt");
    if let Some(d) = dt {
        if !(d > 0.0) {
            r.errors.push(format!("analysis.dt: must be positive, got {d}"));
        }
    }
    let resolution = match r.integer("analysis", "resolution") {
        Some(n) if n >= 8 => n as usize,
        Some(n) => {
            r.errors
                .push(format!("analysis.resolution: must be at least 8, got {n}"));
            16
        }
        None => 16,
    };
    let tolerance_profile = match r.string("analysis", "tolerance_profile").as_deref() {
        Some("analytic") => ToleranceProfile::Analytic,
        Some("fd") => ToleranceProfile::Fd,
        Some(other) => {
            r.errors.push(format!(
                "analysis.tolerance_profile: expected analytic | fd, got '{other}'"
            ));
            ToleranceProfile::Analytic
        }
        None => match kind {
            Some(SpecKind::TabulatedFoliation) => ToleranceProfile::Fd,
            _ => ToleranceProfile::Analytic,
        },
    };
    let oracle_sources = match r.integer("analysis", "oracle_sources") {
        Some(n) if n >= 1 => n as usize,
        Some(_) => {
            r.errors
                .push("analysis.oracle_sources: must be at least 1".to_string());
            16
        }
        None => 16,
    };
    let t_range = r.reals("analysis", "t_range", 3).and_then(|xs| {
        let count = xs[2] as usize;
        if xs[2].fract() != 0.0 || !(2..=1_000_000).contains(&count) {
            r.errors.push(
                "analysis.t_range: expected 'start stop count' with integer count in 2..=1000000"
                    .to_string(),
            );
            None
        } else if !(xs[1] > xs[0]) {
            r.errors
                .push("analysis.t_range: stop must exceed start".to_string());
            None
        } else {
            Some((xs[0], xs[1], count))
        }
    });

    // kind sections
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut flrw = None;
    let mut foliation = None;
    let mut tabulated = None;
    match kind {
        Some(SpecKind::Flrw) => {
            for other in ["foliation", "tabulated"] {
                if raw.has_section(other) {
                    r.errors.push(format!(
                        "[{other}]: present but kind is flrw; exactly one kind section is allowed"
                    ));
                }
            }
            let a = r.expression("flrw", "a");
            if a.is_none() && !r.errors.iter().any(|e| e.starts_with("flrw.a")) {
                r.errors.push("flrw.a: missing".to_string());
            }
            if let Some(e) = &a {
                if !e.depends_only_on_time() {
                    r.errors
                        .push("flrw.a: may depend on t only".to_string());
                }
            }
            let curvature = match r.real("flrw", "K") {
                Some(k) if k == 0.0 || k == 1.0 || k == -1.0 => Some(k),
                Some(k) => {
                    r.errors
                        .push(format!("flrw.K: must be -1, 0 or +1, got {k}"));
                    None
                }
                None => {
                    r.errors.push("flrw.K: missing".to_string());
                    None
                }
            };
            let lambda = r
                .expression("flrw", "Lambda")
                .unwrap_or(Expr::Number(0.0));
            if !lambda.depends_only_on_time() {
                r.errors
                    .push("flrw.Lambda: may depend on t only".to_string());
            }
            let omega = r.expression("flrw", "omega");
            if let Some(w) = &omega {
                if !w.depends_only_on_time() {
                    r.errors
                        .push("flrw.omega: may depend on t only".to_string());
                }
            }
            let periods = r
                .reals("flrw", "periods", 3)
                .map(|xs| [xs[0], xs[1], xs[2]])
                .unwrap_or([two_pi; 3]);
            if periods.iter().any(|&p| !(p > 0.0)) {
                r.errors.push("flrw.periods: must be positive".to_string());
            }
            let patch_extent = r.real("flrw", "patch_extent").unwrap_or(0.5);
            if !(patch_extent > 0.0 && patch_extent < 0.57) {
                // keep |x| < 1 on the ball model: sqrt(3) * extent < 1
                r.errors.push(format!(
                    "flrw.patch_extent: must lie in (0, 0.57), got {patch_extent}"
                ));
            }
            if let (Some(a), Some(curvature)) = (a, curvature) {
                flrw = Some(FlrwSection {
                    a,
                    curvature,
                    lambda,
                    omega,
                    periods,
                    patch_extent,
                });
            }
        }
        Some(SpecKind::AnalyticFoliation) => {
            for other in ["flrw", "tabulated"] {
                if raw.has_section(other) {
                    r.errors.push(format!(
                        "[{other}]: present but kind is analytic-foliation; exactly one kind section is allowed"
                    ));
                }
            }
            for rejected in METRIC_REJECTED {
                if raw.get("foliation", rejected).is_some() {
                    r.errors.push(format!(
                        "foliation.{rejected}: only the six upper-triangle components g11 g12 g13 g22 g23 g33 are accepted"
                    ));
                }
            }
            let lapse = r.expression("foliation", "N");
            if lapse.is_none() && !r.errors.iter().any(|e| e.starts_with("foliation.N")) {
                r.errors.push("foliation.N: missing".to_string());
            }
            let mut metric = Vec::new();
            for key in METRIC_KEYS {
                match r.expression("foliation", key) {
                    Some(e) => metric.push(e),
                    None => {
                        if !r.errors.iter().any(|e| e.starts_with(&format!("foliation.{key}"))) {
                            r.errors.push(format!("foliation.{key}: missing"));
                        }
                    }
                }
            }
            let lambda = r
                .expression("foliation", "Lambda")
                .unwrap_or(Expr::Number(0.0));
            let periods = r
                .reals("foliation", "periods", 3)
                .map(|xs| [xs[0], xs[1], xs[2]])
                .unwrap_or([two_pi; 3]);
            if periods.iter().any(|&p| !(p > 0.0)) {
                r.errors
                    .push("foliation.periods: must be positive".to_string());
            }
            if let (Some(lapse), Ok(metric)) = (lapse, <[Expr; 6]>::try_from(metric)) {
                foliation = Some(FoliationSection {
                    lapse,
                    metric,
                    lambda,
                    periods,
                });
            }
        }
        Some(SpecKind::TabulatedFoliation) => {
            for other in ["flrw", "foliation"] {
                if raw.has_section(other) {
                    r.errors.push(format!(
                        "[{other}]: present but kind is tabulated-foliation; exactly one kind section is allowed"
                    ));
                }
            }
            let times = [
                r.real("tabulated", "t_minus"),
                r.real("tabulated", "t_zero"),
                r.real("tabulated", "t_plus"),
            ];
            for (key, v) in ["t_minus", "t_zero", "t_plus"].iter().zip(&times) {
                if v.is_none() && !r.errors.iter().any(|e| e.starts_with(&format!("tabulated.{key}"))) {
                    r.errors.push(format!("tabulated.{key}: missing"));
                }
            }
            let mut path = |key: &str| -> Option<PathBuf> {
                match r.string("tabulated", key) {
                    Some(p) => Some(base_dir.join(p)),
                    None => {
                        r.errors.push(format!("tabulated.{key}: missing"));
                        None
                    }
                }
            };
            let lapse_paths = [path("n_minus"), path("n_zero"), path("n_plus")];
            let metric_paths = [path("g_minus"), path("g_zero"), path("g_plus")];
            let lambda = r.real("tabulated", "Lambda").unwrap_or(0.0);
            if let (Some(a), Some(b), Some(c)) = (times[0], times[1], times[2]) {
                if lapse_paths.iter().all(Option::is_some)
                    && metric_paths.iter().all(Option::is_some)
                {
                    tabulated = Some(TabulatedSection {
                        times: [a, b, c],
                        lapse_paths: lapse_paths.map(Option::unwrap),
                        metric_paths: metric_paths.map(Option::unwrap),
                        lambda,
                    });
                }
            }
        }
        None => {}
    }

    // optional bm section
    let bm = if raw.has_section("bm") {
        let n = match r.integer("bm", "n") {
            Some(n) if n >= 3 => n as u32,
            Some(n) => {
                r.errors.push(format!("bm.n: must be at least 3, got {n}"));
                3
            }
            None => 3,
        };
        let alpha = r.real("bm", "alpha").unwrap_or(0.0);
        let beta = r.real("bm", "beta").unwrap_or(0.0);
        let gamma = r.real("bm", "gamma").unwrap_or(0.0);
        let u = r.expression("bm", "u");
        if u.is_none() && !r.errors.iter().any(|e| e.starts_with("bm.u")) {
            r.errors.push("bm.u: missing".to_string());
        }
        let v = r.expression("bm", "v");
        if v.is_none() && !r.errors.iter().any(|e| e.starts_with("bm.v")) {
            r.errors.push("bm.v: missing".to_string());
        }
        let mut q = Vec::new();
        for key in Q_KEYS {
            match r.expression("bm", key) {
                Some(e) => q.push(e),
                None => {
                    if !r.errors.iter().any(|e| e.starts_with(&format!("bm.{key}"))) {
                        r.errors.push(format!("bm.{key}: missing"));
                    }
                }
            }
        }
        match (u, v, <[Expr; 6]>::try_from(q)) {
            (Some(u), Some(v), Ok(q)) => Some(BmSection {
                n,
                alpha,
                beta,
                gamma,
                u,
                v,
                q,
            }),
            _ => None,
        }
    } else {
        None
    };

    errors.extend(
        raw.unused_keys(&["spacetime", "flrw", "foliation", "tabulated", "analysis", "bm"]),
    );

    let (Some(kind), Some(t0)) = (kind, t0) else {
        return Err(SpecError { errors });
    };
    if !errors.is_empty() {
        return Err(SpecError { errors });
    }
    Ok(SpacetimeSpec {
        kind,
        flrw,
        foliation,
        tabulated,
        bm,
        analysis: AnalysisSection {
            t0,
            dt,
            resolution,
            tolerance_profile,
            oracle_sources,
            t_range,
        },
    })
}

/// Loads and validates a spec file; relative field paths resolve against
/// the spec's directory.
pub fn load_spec(path: &Path) -> Result<SpacetimeSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|e| SpecError {
        errors: vec![format!("cannot read {}: {e}", path.display())],
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_spec(&text, base)
}
