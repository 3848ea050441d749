//! Shooting solver: find decaying singular solutions by bisection over the
//! matching constant a = f(0), organize them into branches by zero count of
//! the connecting orbit, map branches to α through β_α(λ)q = f(0), and invert
//! that map for a target α.

use serde::{Serialize, Serializer};

use crate::error::Error;
use crate::greens::green;
use crate::grid::{surface, GL5};
use crate::model::{alpha_from_charge, beta, lambda_alpha, regime_classify, Params, Regime};
use crate::radial_ode::{integrate, OdeCtrl, Outcome, OutcomeKind, RadialProfile};
use crate::Result;

/// Controls for the a-scan, transition bisection, and the q-continuation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShootControls {
    /// a-bracket; when absent, [-B, B] with B = 10·(1 + |q·𝒢_λ(r0)|),
    /// widened ×4 up to 3 times if no transition is found.
    pub bracket: Option<(f64, f64)>,
    /// Number of scan points across the bracket.
    pub resolution: usize,
    /// Relative bisection tolerance on a.
    pub bisect_tol: f64,
    /// Highest branch index retained by scans.
    pub max_k: usize,
    /// Start radius; default 1e-6/√λ.
    pub r0: Option<f64>,
    /// Outer radius; default 30/√λ.
    pub rmax: Option<f64>,
    /// q-grid for α-inversion: geometric on [q_lo, q_hi].
    pub q_lo: f64,
    pub q_hi: f64,
    pub q_per_decade: usize,
    pub ode: OdeCtrl,
}

impl Default for ShootControls {
    fn default() -> Self {
        ShootControls {
            bracket: None,
            resolution: 160,
            bisect_tol: 1e-12,
            max_k: 6,
            r0: None,
            rmax: None,
            q_lo: 1e-2,
            q_hi: 1e3,
            q_per_decade: 6,
            ode: OdeCtrl::default(),
        }
    }
}

impl ShootControls {
    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.bracket {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParams(format!(
                    "a-bracket must be finite and ordered, got [{lo}, {hi}]"
                )));
            }
        }
        if self.resolution < 8 {
            return Err(Error::InvalidParams(format!(
                "scan resolution must be at least 8, got {}",
                self.resolution
            )));
        }
        if !(self.bisect_tol >= 1e-14) {
            return Err(Error::InvalidParams(format!(
                "bisection tolerance must be at least 1e-14, got {}",
                self.bisect_tol
            )));
        }
        if !(self.q_lo > 0.0 && self.q_hi > self.q_lo) {
            return Err(Error::InvalidParams(format!(
                "q-range must satisfy 0 < q_lo < q_hi, got [{}, {}]",
                self.q_lo, self.q_hi
            )));
        }
        Ok(())
    }

    fn r0_for(&self, params: &Params) -> f64 {
        self.r0.unwrap_or(1e-6 / params.lambda.sqrt())
    }

    fn rmax_for(&self, params: &Params) -> f64 {
        self.rmax.unwrap_or(30.0 / params.lambda.sqrt())
    }

    fn bracket_for(&self, params: &Params, q: f64) -> (f64, f64) {
        match self.bracket {
            Some(b) => b,
            None => {
                // Matching constants of separators satisfy a = β_α(λ)q and
                // stay on the trapped-orbit amplitude scale λ^{1/(p-1)}
                // regardless of q; capping the data term keeps the scan
                // resolution from collapsing at large charge.
                let r0 = self.r0_for(params);
                let amp = 5.0 * params.lambda.powf(1.0 / (params.p - 1.0));
                let b = 10.0 * (1.0 + (q * green(params.d, params.lambda, r0)).abs().min(amp));
                (-b, b)
            }
        }
    }
}

/// α label of a branch point: computed from β_α(λ)q = f(0) in the strong
/// regime, free for regular (q = 0) solutions, unconstrained in the weak
/// regime where f(0) does not exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaLabel {
    Finite(f64),
    Free,
    Unconstrained,
}

impl AlphaLabel {
    pub fn finite(self) -> Option<f64> {
        match self {
            AlphaLabel::Finite(a) => Some(a),
            _ => None,
        }
    }
}

impl Serialize for AlphaLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AlphaLabel::Finite(a) => s.serialize_f64(*a),
            AlphaLabel::Free => s.serialize_str("free"),
            AlphaLabel::Unconstrained => s.serialize_str("unconstrained"),
        }
    }
}

/// Residual block carried by every branch point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    /// Interior ODE defect of the profile (relative).
    pub ode: f64,
    /// |f(0) - β_α(λ)q| against the point's own α (or the target α when the
    /// point answers a fixed-α query).
    pub relation: f64,
    /// |ũ(R_max)| / sup|ũ|: tail smallness after grafting.
    pub decay_margin: f64,
}

/// One decaying solution found by shooting, labeled by the zero count of the
/// connecting orbit.
#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub q: f64,
    /// Matching constant of the local expansion f(r) ≈ a + A·s(r).
    pub a: f64,
    /// f(0); absent in the weak regime where f is singular at the origin.
    pub f0: Option<f64>,
    pub zero_count: usize,
    pub alpha: AlphaLabel,
    /// Action value; absent in the weak regime (𝒢^{p+1} not integrable).
    pub action: Option<f64>,
    pub residuals: Residuals,
    /// True when the tail was certified as decaying (not a bisection-limit
    /// flag).
    pub certified: bool,
    #[serde(skip_serializing)]
    pub profile: RadialProfile,
    /// Set by the CLI when the profile CSV is written to disk.
    pub profile_file: Option<String>,
}

/// Cubic-Hermite value and derivative interpolation on [0, 1] from endpoint
/// values and scaled derivatives (y', already multiplied by the cell width).
fn hermite(t: f64, y0: f64, m0: f64, y1: f64, m1: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let v = y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + m0 * (t3 - 2.0 * t2 + t)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + m1 * (t3 - t2);
    let dv = y0 * (6.0 * t2 - 6.0 * t)
        + m0 * (3.0 * t2 - 4.0 * t + 1.0)
        + y1 * (-6.0 * t2 + 6.0 * t)
        + m1 * (3.0 * t2 - 2.0 * t);
    (v, dv)
}

/// Action of a profile with matching constant f0 = a:
///   S = (1/2)∫(|f'|² + λf²) dμ + f(0)q/2 − (1/(p+1))∫|ũ|^{p+1} dμ,
/// dμ = |S^{d-1}| r^{d-1} dr. The charge term β_α(λ)q²/2 equals f(0)q/2 by
/// the α-relation, so no α is needed. Cell quadrature is 5-point Gauss on
/// cubic Hermite interpolants built from node values and derivatives; the
/// sub-r0 head of the |ũ|^{p+1} term uses the local form f0 + q𝒢_λ on
/// geometric panels.
pub fn profile_action(profile: &RadialProfile, f0: f64) -> Result<f64> {
    let params = &profile.meta;
    if regime_classify(params.d, params.p) != Regime::Strong {
        return Err(Error::WeakRegimeRejected);
    }
    let d = params.d;
    let lambda = params.lambda;
    let p = params.p;
    let q = profile.q;
    let sd = surface(d);
    let n = profile.grid.len();
    if n < 2 {
        return Err(Error::InvalidParams("profile too short for quadrature".into()));
    }
    let g = |r: f64| q * green(d, lambda, r);
    let dg = |r: f64| q * crate::greens::green_deriv(d, lambda, r);

    let mut dom = 0.0; // ∫ (f'² + λ f²) dμ
    let mut lp = 0.0; // ∫ |ũ|^{p+1} dμ
    for i in 1..n {
        let (r0, r1) = (profile.grid.radii[i - 1], profile.grid.radii[i]);
        let h = r1 - r0;
        let (f_a, f_b) = (profile.u[i - 1] - g(r0), profile.u[i] - g(r1));
        let (df_a, df_b) = (profile.du[i - 1] - dg(r0), profile.du[i] - dg(r1));
        let (u_a, u_b) = (profile.u[i - 1], profile.u[i]);
        let (du_a, du_b) = (profile.du[i - 1], profile.du[i]);
        for &(x, w) in GL5.iter() {
            let t = 0.5 * (x + 1.0);
            let r = r0 + t * h;
            let wr = 0.5 * h * w * sd * r.powi(d as i32 - 1);
            let (fv, fd) = hermite(t, f_a, h * df_a, f_b, h * df_b);
            let fd = fd / h;
            dom += wr * (fd * fd + lambda * fv * fv);
            let (uv, _) = hermite(t, u_a, h * du_a, u_b, h * du_b);
            lp += wr * uv.abs().powf(p + 1.0);
        }
    }
    // Head of the L^{p+1} term below r0: ũ ≈ f0 + q𝒢_λ (the A·s(r)
    // correction is subdominant there).
    let r_in = profile.grid.r0();
    if q != 0.0 {
        let head = |r: f64| (f0 + g(r)).abs().powf(p + 1.0) * sd * r.powi(d as i32 - 1);
        lp += crate::grid::integrate_geometric(&head, r_in * 1e-20, r_in, 1.05);
    }
    Ok(0.5 * dom + 0.5 * f0 * q - lp / (p + 1.0))
}

/// Classification key of one shot for transition detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShotClass {
    Plus(usize),
    Minus(usize),
    Decay,
    Undetermined,
}

fn classify(o: &Outcome) -> ShotClass {
    match o.kind {
        OutcomeKind::Decay => ShotClass::Decay,
        OutcomeKind::BlowUpPlus { .. } => ShotClass::Plus(o.zeros),
        OutcomeKind::BlowUpMinus { .. } => ShotClass::Minus(o.zeros),
        OutcomeKind::Undetermined => ShotClass::Undetermined,
    }
}

/// Transitions worth bisecting: differing classes with at least one trapped
/// (blow-up) endpoint. Adjacent basins alternate sign and increment the zero
/// count, so every decay separator lies inside such an interval; an
/// Undetermined wall is allowed because the basin at its edge still ends in a
/// separator, which bisection can reach from the trapped side.
fn bisectable(c1: ShotClass, c2: ShotClass) -> bool {
    if c1 == c2 || c1 == ShotClass::Decay || c2 == ShotClass::Decay {
        return false;
    }
    let trapped = |c| matches!(c, ShotClass::Plus(_) | ShotClass::Minus(_));
    trapped(c1) || trapped(c2)
}

fn shoot(
    params: &Params,
    q: f64,
    a: f64,
    r0: f64,
    rmax: f64,
    ctrl: &ShootControls,
) -> Result<(RadialProfile, Outcome)> {
    integrate(params, q, a, r0, rmax, &ctrl.ode)
}

fn make_point(
    params: &Params,
    q: f64,
    a: f64,
    profile: RadialProfile,
    outcome: &Outcome,
    ctrl: &ShootControls,
) -> Result<BranchPoint> {
    let strong = regime_classify(params.d, params.p) == Regime::Strong;
    let f0 = if strong { Some(a) } else { None };
    let alpha = if !strong {
        AlphaLabel::Unconstrained
    } else if q == 0.0 {
        AlphaLabel::Free
    } else {
        AlphaLabel::Finite(alpha_from_charge(q, a, params.lambda, params.d)?)
    };
    let action = if strong { profile_action(&profile, a).ok() } else { None };
    let sup = profile.sup_abs().max(1e-300);
    let tail = profile.u.last().copied().unwrap_or(0.0).abs() / sup;
    let certified = outcome.kind == OutcomeKind::Decay;
    let residuals = Residuals {
        ode: profile.ode_residual(ctrl.ode.linear, 1e-3),
        relation: 0.0, // α is defined by the relation; overwritten for fixed-α queries
        decay_margin: tail,
    };
    Ok(BranchPoint {
        q,
        a,
        f0,
        zero_count: outcome.zeros,
        alpha,
        action,
        residuals,
        certified,
        profile,
        profile_file: None,
    })
}

/// Scan the matching constant over the bracket, bisect every blow-up sign
/// transition to tolerance, and return one BranchPoint per separator, sorted
/// by zero count. Points whose tail could not be certified at the bisection
/// limit are returned flagged (`certified = false`). σ = −1 restricts the
/// result to the zero-count-0 branch.
pub fn match_decay(params: &Params, q: f64, ctrl: &ShootControls) -> Result<Vec<BranchPoint>> {
    params.validate()?;
    ctrl.validate()?;
    let r0 = ctrl.r0_for(params);
    let rmax = ctrl.rmax_for(params);
    let (mut lo, mut hi) = ctrl.bracket_for(params, q);
    // Deep basins (zero count far above max_k) are cut short: abort the march
    // after max_k + 4 sign changes so the scan only pays for shallow orbits.
    let ctrl = &{
        let mut c = *ctrl;
        c.ode.max_zeros = Some(c.max_k + 4);
        c
    };

    let mut points: Vec<BranchPoint> = Vec::new();
    for widen in 0..4 {
        points.clear();
        let n = ctrl.resolution.max(8);
        let mut scan: Vec<(f64, ShotClass)> = Vec::with_capacity(n);
        for i in 0..n {
            let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let (profile, outcome) = shoot(params, q, a, r0, rmax, ctrl)?;
            let class = classify(&outcome);
            if class == ShotClass::Decay {
                points.push(make_point(params, q, a, profile, &outcome, ctrl)?);
            }
            scan.push((a, class));
        }
        // A separator with k zeros lies between basins with k and k+1 zeros,
        // so intervals whose basins all exceed max_k cannot contribute.
        let relevant = |c: ShotClass| match c {
            ShotClass::Plus(z) | ShotClass::Minus(z) => z <= ctrl.max_k,
            ShotClass::Decay => true,
            ShotClass::Undetermined => false,
        };
        let mut work: Vec<(f64, ShotClass, f64, ShotClass)> = Vec::new();
        for w in scan.windows(2) {
            if bisectable(w[0].1, w[1].1) && (relevant(w[0].1) || relevant(w[1].1)) {
                work.push((w[0].0, w[0].1, w[1].0, w[1].1));
            }
        }
        let any_transition = !work.is_empty() || !points.is_empty();
        let mut budget = 20_000usize;
        while let Some((mut alo, clo, mut ahi, chi)) = work.pop() {
            if work.len() > 256 {
                break;
            }
            loop {
                if budget == 0 {
                    break;
                }
                let scale = 1.0 + alo.abs().max(ahi.abs());
                let mid = 0.5 * (alo + ahi);
                let converged = ahi - alo <= ctrl.bisect_tol * scale;
                let (profile, outcome) = shoot(params, q, mid, r0, rmax, ctrl)?;
                budget -= 1;
                let cmid = classify(&outcome);
                if cmid == ShotClass::Decay || converged {
                    points.push(make_point(params, q, mid, profile, &outcome, ctrl)?);
                    break;
                }
                if cmid == clo {
                    alo = mid;
                } else if cmid == chi {
                    ahi = mid;
                } else if cmid == ShotClass::Undetermined {
                    if clo == ShotClass::Undetermined {
                        alo = mid;
                    } else if chi == ShotClass::Undetermined {
                        ahi = mid;
                    } else {
                        // Genuinely slow orbit between two trapped walls:
                        // flag and stop refining this interval.
                        points.push(make_point(params, q, mid, profile, &outcome, ctrl)?);
                        break;
                    }
                } else {
                    // A basin between the endpoints: both halves contain
                    // separators of their own.
                    work.push((alo, clo, mid, cmid));
                    work.push((mid, cmid, ahi, chi));
                    break;
                }
            }
        }
        if any_transition {
            break;
        }
        if widen == 3 {
            break;
        }
        let c = 0.5 * (lo + hi);
        let half = 4.0 * 0.5 * (hi - lo);
        lo = c - half;
        hi = c + half;
    }

    // Deduplicate separators found from both sides of a shared scan node.
    points.sort_by(|x, y| x.a.total_cmp(&y.a));
    points.dedup_by(|x, y| {
        (x.a - y.a).abs() <= 100.0 * ctrl.bisect_tol * (1.0 + x.a.abs())
            && x.zero_count == y.zero_count
    });
    points.retain(|pt| pt.zero_count <= ctrl.max_k);
    if params.sigma < 0.0 {
        points.retain(|pt| pt.zero_count == 0);
    }
    points.sort_by(|x, y| x.zero_count.cmp(&y.zero_count).then(x.a.total_cmp(&y.a)));
    Ok(points)
}

/// One row of a branch scan table; failures are recorded in-row.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub q: f64,
    pub a: Option<f64>,
    pub f0: Option<f64>,
    pub alpha: Option<f64>,
    pub action: Option<f64>,
    pub error: Option<String>,
}

/// Geometric q-grid over [q_lo, q_hi].
fn q_grid(q_lo: f64, q_hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (q_hi / q_lo).log10();
    let n = ((decades * per_decade.max(1) as f64).ceil() as usize).max(1);
    (0..=n).map(|i| q_lo * (q_hi / q_lo).powf(i as f64 / n as f64)).collect()
}

/// The k-branch point at charge q, preferring certified points and, among
/// those, the largest matching constant (the convention that selects the
/// positive-profile sheet at k = 0, q > 0).
pub fn pick_branch(points: Vec<BranchPoint>, k: usize) -> Option<BranchPoint> {
    let mut cands: Vec<BranchPoint> =
        points.into_iter().filter(|pt| pt.zero_count == k).collect();
    cands.sort_by(|x, y| {
        y.certified.cmp(&x.certified).then(y.a.total_cmp(&x.a))
    });
    cands.into_iter().next()
}

/// Tabulate the zero-count-k branch over a geometric q-grid. Per-q failures
/// are recorded in the table and the scan continues.
pub fn branch_scan(
    params: &Params,
    q_lo: f64,
    q_hi: f64,
    k: usize,
    ctrl: &ShootControls,
) -> Result<Vec<ScanRow>> {
    params.validate()?;
    ctrl.validate()?;
    if !(q_lo > 0.0 && q_hi > q_lo) {
        return Err(Error::InvalidParams(format!(
            "branch_scan q-range must satisfy 0 < q_lo < q_hi, got [{q_lo}, {q_hi}]"
        )));
    }
    if regime_classify(params.d, params.p) != Regime::Strong {
        return Err(Error::WeakRegimeRejected);
    }
    let mut rows = Vec::new();
    for q in q_grid(q_lo, q_hi, ctrl.q_per_decade) {
        let row = match match_decay(params, q, ctrl) {
            Ok(points) => match pick_branch(points, k) {
                Some(pt) => ScanRow {
                    q,
                    a: Some(pt.a),
                    f0: pt.f0,
                    alpha: pt.alpha.finite(),
                    action: pt.action,
                    error: None,
                },
                None => ScanRow {
                    q,
                    a: None,
                    f0: None,
                    alpha: None,
                    action: None,
                    error: Some(format!("no zero-count-{k} separator in bracket")),
                },
            },
            Err(e) => ScanRow {
                q,
                a: None,
                f0: None,
                alpha: None,
                action: None,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

/// CSV rendering of a branch scan table.
pub fn scan_to_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("q,a,f0,alpha,action,error\n");
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    for row in rows {
        out.push_str(&format!(
            "{:.17e},{},{},{},{},{}\n",
            row.q,
            fmt(row.a),
            fmt(row.f0),
            fmt(row.alpha),
            fmt(row.action),
            row.error.as_deref().unwrap_or("")
        ));
    }
    out
}

/// All k-branch points along the q-grid (both signs of the sheet), used for
/// uniqueness counting: returns every (q, point) with zero_count = k.
pub fn solve_fixed_alpha_all(
    params: &Params,
    k: usize,
    ctrl: &ShootControls,
) -> Result<Vec<BranchPoint>> {
    let roots = alpha_roots(params, k, ctrl)?;
    if roots.is_empty() {
        return Err(Error::BranchNotFound {
            k,
            a_lo: f64::NAN,
            a_hi: f64::NAN,
            q_lo: ctrl.q_lo,
            q_hi: ctrl.q_hi,
        });
    }
    Ok(roots)
}

/// Root-find q ↦ α_k(q) − α_target along the zero-count-k branch and return
/// the branch point at the root. λ > λ_α is enforced for the positive (k = 0)
/// branch, where no solution exists below the threshold.
pub fn solve_fixed_alpha(params: &Params, k: usize, ctrl: &ShootControls) -> Result<BranchPoint> {
    let mut roots = alpha_roots(params, k, ctrl)?;
    if roots.is_empty() {
        return Err(Error::BranchNotFound {
            k,
            a_lo: f64::NAN,
            a_hi: f64::NAN,
            q_lo: ctrl.q_lo,
            q_hi: ctrl.q_hi,
        });
    }
    // Convention: prefer the certified root with the largest matching
    // constant (positive-profile sheet at k = 0).
    roots.sort_by(|x, y| y.certified.cmp(&x.certified).then(y.a.total_cmp(&x.a)));
    Ok(roots.swap_remove(0))
}

fn alpha_roots(params: &Params, k: usize, ctrl: &ShootControls) -> Result<Vec<BranchPoint>> {
    params.validate()?;
    ctrl.validate()?;
    let alpha_t = params
        .alpha
        .finite()
        .ok_or_else(|| Error::InvalidParams("fixed-α solve requires a finite α".into()))?;
    if regime_classify(params.d, params.p) != Regime::Strong {
        return Err(Error::WeakRegimeRejected);
    }
    if k == 0 {
        let la = lambda_alpha(params);
        if params.lambda <= la {
            return Err(Error::LambdaBelowThreshold { lambda: params.lambda, lambda_alpha: la });
        }
    }

    let qs = q_grid(ctrl.q_lo, ctrl.q_hi, ctrl.q_per_decade);
    // Only the k-branch matters here; trimming max_k skips bisections of
    // higher-index transitions.
    let ctrl = &ShootControls { max_k: k, ..*ctrl };
    // k-branch points per q, kept per-sheet: each q may carry separators at
    // distinct matching constants; sheets are threaded by a-continuity.
    let mut per_q: Vec<Vec<BranchPoint>> = Vec::with_capacity(qs.len());
    for &q in &qs {
        let pts = match_decay(params, q, ctrl)?
            .into_iter()
            .filter(|pt| pt.certified && pt.zero_count == k && pt.alpha.finite().is_some())
            .collect();
        per_q.push(pts);
    }

    let mut roots: Vec<BranchPoint> = Vec::new();
    for i in 1..qs.len() {
        for pt0 in &per_q[i - 1] {
            // Thread the sheet to the nearest matching constant at the next q;
            // a large jump means the sheet folded away between the grid points.
            let cand = per_q[i]
                .iter()
                .min_by(|x, y| (x.a - pt0.a).abs().total_cmp(&(y.a - pt0.a).abs()))
                .filter(|pt1| (pt1.a - pt0.a).abs() <= 0.5 * (1.0 + pt0.a.abs()));
            let al0 = pt0.alpha.finite().unwrap();
            match cand {
                Some(pt1) => {
                    let al1 = pt1.alpha.finite().unwrap();
                    if (al0 - alpha_t) == 0.0 {
                        roots.push(finish_root(params, pt0.clone(), alpha_t, ctrl)?);
                        continue;
                    }
                    if (al0 - alpha_t) * (al1 - alpha_t) > 0.0 {
                        continue;
                    }
                    if let Some(root) = bisect_alpha(
                        params,
                        k,
                        (pt0.q, pt0.a, al0),
                        (pt1.q, pt1.a, al1),
                        alpha_t,
                        ctrl,
                    )? {
                        roots.push(finish_root(params, root, alpha_t, ctrl)?);
                    }
                }
                None => {
                    // α often crosses the target just before the fold; march
                    // toward it along the surviving part of the sheet.
                    if let Some(root) =
                        fold_march(params, k, (pt0.q, pt0.a, al0), qs[i], alpha_t, ctrl)?
                    {
                        roots.push(finish_root(params, root, alpha_t, ctrl)?);
                    }
                }
            }
        }
    }
    // A sheet may produce the same root from both neighbors of the grid node.
    roots.sort_by(|x, y| x.q.total_cmp(&y.q));
    roots.dedup_by(|x, y| {
        (x.q - y.q).abs() <= 1e-6 * y.q.abs() && (x.a - y.a).abs() <= 1e-6 * (1.0 + y.a.abs())
    });
    Ok(roots)
}

/// Bisection in log q along one sheet; the a-bracket at each trial q is
/// narrowed around the linear prediction of the matching constant.
fn bisect_alpha(
    params: &Params,
    k: usize,
    lo: (f64, f64, f64),
    hi: (f64, f64, f64),
    alpha_t: f64,
    ctrl: &ShootControls,
) -> Result<Option<BranchPoint>> {
    let (mut q0, mut a0, mut al0) = lo;
    let (mut q1, mut a1, _) = hi;
    let mut best: Option<BranchPoint> = None;
    for _ in 0..60 {
        if (q1 / q0).ln().abs() <= 1e-12 {
            break;
        }
        let t = 0.5;
        let qm = q0.powf(1.0 - t) * q1.powf(t);
        let s = (qm / q0).ln() / (q1 / q0).ln();
        let a_pred = a0 + s * (a1 - a0);
        let window = (a1 - a0).abs().max(1e-3 * (1.0 + a_pred.abs()));
        let narrow = ShootControls {
            bracket: Some((a_pred - 2.0 * window, a_pred + 2.0 * window)),
            resolution: 24,
            ..*ctrl
        };
        let pts = match_decay(params, qm, &narrow)?;
        let Some(pt) = pts
            .into_iter()
            .filter(|pt| pt.certified && pt.zero_count == k && pt.alpha.finite().is_some())
            .min_by(|x, y| (x.a - a_pred).abs().total_cmp(&(y.a - a_pred).abs()))
        else {
            // Sheet lost inside the narrowed bracket: give up on this interval.
            return Ok(best);
        };
        let alm = pt.alpha.finite().unwrap();
        let am = pt.a;
        if (alm - alpha_t).abs() <= 1e-10 * (1.0 + alpha_t.abs()) {
            return Ok(Some(pt));
        }
        best = Some(pt);
        if (al0 - alpha_t) * (alm - alpha_t) <= 0.0 {
            q1 = qm;
            a1 = am;
        } else {
            q0 = qm;
            a0 = am;
            al0 = alm;
        }
    }
    Ok(best)
}

/// Track a sheet that folds away inside (q_lo, q_hi]: bisect in log q on
/// sheet existence, following the matching constant, and hand any α sign
/// change over to bisect_alpha. The k-sheets terminate at folds where the
/// a > 0 and a < 0 halves merge; crossings of the target α frequently sit
/// just below the fold, between scan grid points.
fn fold_march(
    params: &Params,
    k: usize,
    last: (f64, f64, f64),
    q_hi: f64,
    alpha_t: f64,
    ctrl: &ShootControls,
) -> Result<Option<BranchPoint>> {
    let (mut q0, mut a0, mut al0) = last;
    let mut qhi = q_hi;
    for _ in 0..40 {
        if (qhi / q0).ln() <= 1e-3 {
            break;
        }
        let qm = (q0 * qhi).sqrt();
        let window = 1.0 + 0.5 * a0.abs();
        let narrow = ShootControls {
            bracket: Some((a0 - window, a0 + window)),
            resolution: 48,
            ..*ctrl
        };
        let pts = match_decay(params, qm, &narrow)?;
        let found = pts
            .into_iter()
            .filter(|pt| pt.certified && pt.zero_count == k && pt.alpha.finite().is_some())
            .min_by(|x, y| (x.a - a0).abs().total_cmp(&(y.a - a0).abs()));
        match found {
            Some(pt) => {
                let alm = pt.alpha.finite().unwrap();
                if (al0 - alpha_t) * (alm - alpha_t) <= 0.0 {
                    return bisect_alpha(
                        params,
                        k,
                        (q0, a0, al0),
                        (qm, pt.a, alm),
                        alpha_t,
                        ctrl,
                    );
                }
                q0 = qm;
                a0 = pt.a;
                al0 = alm;
            }
            None => qhi = qm,
        }
    }
    Ok(None)
}

/// Stamp the relation residual against the target α onto a root.
fn finish_root(
    params: &Params,
    mut pt: BranchPoint,
    alpha_t: f64,
    _ctrl: &ShootControls,
) -> Result<BranchPoint> {
    let mut target = *params;
    target.alpha = crate::model::Alpha::Finite(alpha_t);
    let b = beta(&target, params.lambda)?;
    if let Some(f0) = pt.f0 {
        pt.residuals.relation = (f0 - b * pt.q).abs();
    }
    Ok(pt)
}

/// The ground state at fixed α: the zero-count-0 output of solve_fixed_alpha
/// with positivity, monotone decrease, and q ≠ 0 certified on the grid.
/// Returned with the q > 0 sign convention.
pub fn ground_state_shoot(params: &Params, ctrl: &ShootControls) -> Result<BranchPoint> {
    if params.sigma <= 0.0 {
        return Err(Error::InvalidParams(
            "ground states exist in the source case σ = +1 only".into(),
        ));
    }
    let pt = solve_fixed_alpha(params, 0, ctrl)?;
    let sup = pt.profile.sup_abs();
    if pt.q.abs() <= 1e-8 * sup {
        return Err(Error::InvalidParams(format!(
            "ground-state charge degenerate: |q| = {:.3e} vs ‖u‖ = {:.3e}",
            pt.q.abs(),
            sup
        )));
    }
    if pt.q < 0.0 {
        return Err(Error::InvalidParams(
            "q-scan convention violated: expected the q > 0 branch".into(),
        ));
    }
    for (i, &u) in pt.profile.u.iter().enumerate() {
        // Positivity up to quadrature noise in the far tail.
        if u < -1e-8 * sup {
            return Err(Error::InvalidParams(format!(
                "ground-state positivity violated at r = {:.6e}: u = {:.3e}",
                pt.profile.grid.radii[i], u
            )));
        }
    }
    let noise = 1e-8 * sup;
    for w in pt.profile.u.windows(2) {
        if w[1] > w[0] + noise {
            return Err(Error::InvalidParams(
                "ground-state monotone decrease violated on the grid".into(),
            ));
        }
    }
    Ok(pt)
}

/// Serialize helper exposing the full residual block plus a profile file
/// reference for external consumers.
pub fn branch_point_json(pt: &BranchPoint) -> std::result::Result<String, serde_json::Error> {
    #[derive(Serialize)]
    struct Out<'a> {
        q: f64,
        a: f64,
        f0: Option<f64>,
        zero_count: usize,
        alpha: &'a AlphaLabel,
        action: Option<f64>,
        residuals: &'a Residuals,
        certified: bool,
        profile_file: Option<&'a str>,
    }
    serde_json::to_string_pretty(&Out {
        q: pt.q,
        a: pt.a,
        f0: pt.f0,
        zero_count: pt.zero_count,
        alpha: &pt.alpha,
        action: pt.action,
        residuals: &pt.residuals,
        certified: pt.certified,
        profile_file: pt.profile_file.as_deref(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Alpha;

    fn params(d: u8, sigma: f64, p: f64, lambda: f64) -> Params {
        Params { d, sigma, p, lambda, alpha: Alpha::Finite(0.0) }
    }

    #[test]
    fn controls_validation() {
        let mut ctrl = ShootControls::default();
        assert!(ctrl.validate().is_ok());
        ctrl.resolution = 2;
        assert!(ctrl.validate().is_err());
        ctrl.resolution = 100;
        ctrl.bracket = Some((1.0, -1.0));
        assert!(ctrl.validate().is_err());
    }

    #[test]
    fn linear_mode_finds_green() {
        // Test-mode linear source: the only decaying start is a = 0 and the
        // profile is exactly q𝒢_λ.
        let pr = params(2, 1.0, 3.0, 1.0);
        let ctrl = ShootControls {
            ode: OdeCtrl { linear: true, ..OdeCtrl::default() },
            resolution: 40,
            ..ShootControls::default()
        };
        let pts = match_decay(&pr, 1.0, &ctrl).unwrap();
        assert_eq!(pts.len(), 1, "expected one separator, got {}", pts.len());
        let pt = &pts[0];
        assert!(pt.a.abs() <= 1e-9, "a = {:.3e}", pt.a);
        assert_eq!(pt.zero_count, 0);
        assert!(pt.certified);
        let mut worst: f64 = 0.0;
        for (i, &r) in pt.profile.grid.radii.iter().enumerate() {
            let g = green(2, 1.0, r);
            worst = worst.max((pt.profile.u[i] - g).abs() / g);
        }
        assert!(worst <= 1e-7, "profile vs 𝒢: {worst:.3e}");
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // t³ on [0,1]: values 0,1, derivatives 0,3.
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let (v, dv) = hermite(t, 0.0, 0.0, 1.0, 3.0);
            assert!((v - t.powi(3)).abs() <= 1e-14);
            assert!((dv - 3.0 * t * t).abs() <= 1e-13);
        }
    }

    #[test]
    fn q_grid_is_geometric() {
        let qs = q_grid(1e-2, 1e2, 4);
        assert_eq!(qs.len(), 17);
        assert!((qs[0] - 1e-2).abs() <= 1e-15);
        assert!((qs[16] - 1e2).abs() / 1e2 <= 1e-14);
        for w in qs.windows(2) {
            let r = w[1] / w[0];
            assert!((r - qs[1] / qs[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn profile_action_rejects_weak_regime() {
        let pr = params(3, 1.0, 2.5, 1.0);
        let grid = crate::grid::RadialGrid::graded(1e-3, 1.0, 1.05, 0.1).unwrap();
        let n = grid.len();
        let profile = RadialProfile {
            grid,
            u: vec![0.0; n],
            du: vec![0.0; n],
            q: 0.0,
            meta: pr,
        };
        assert!(matches!(profile_action(&profile, 0.0), Err(Error::WeakRegimeRejected)));
    }

    #[test]
    fn action_of_zero_state_is_zero() {
        let pr = params(2, 1.0, 3.0, 1.0);
        let grid = crate::grid::RadialGrid::graded(1e-6, 5.0, 1.05, 0.05).unwrap();
        let n = grid.len();
        let profile =
            RadialProfile { grid, u: vec![0.0; n], du: vec![0.0; n], q: 0.0, meta: pr };
        let s = profile_action(&profile, 0.0).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn action_evenness() {
        // S(u) = S(-u): negate a decaying linear-mode profile.
        let pr = params(2, 1.0, 3.0, 1.0);
        let ctrl = ShootControls {
            ode: OdeCtrl { linear: true, ..OdeCtrl::default() },
            resolution: 40,
            ..ShootControls::default()
        };
        let pts = match_decay(&pr, 1.0, &ctrl).unwrap();
        let pt = &pts[0];
        let s1 = profile_action(&pt.profile, pt.a).unwrap();
        let mut neg = pt.profile.clone();
        for v in neg.u.iter_mut() {
            *v = -*v;
        }
        for v in neg.du.iter_mut() {
            *v = -*v;
        }
        neg.q = -neg.q;
        let s2 = profile_action(&neg, -pt.a).unwrap();
        assert!((s1 - s2).abs() <= 1e-12 * s1.abs().max(1.0), "{s1} vs {s2}");
    }
}
