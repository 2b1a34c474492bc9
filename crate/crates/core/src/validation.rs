//! Validation studies: closed-form crack references, weighted profile error
//! norms, convergence-rate fits, and scripted refinement drivers for the
//! mechanics and flow models.
//!
//! The mechanics studies solve an isolated plane-strain crack in a large
//! slab under remote load — sliding of a frictional crack under compression
//! and opening of a traction-free crack under tension — and compare the
//! computed jump profiles against the classical elliptic crack solutions.
//! The flow study solves a well-driven reservoir with one embedded fracture
//! on a ladder of grids and compares fracture pressure profiles against a
//! fine-grid reference.

use crate::flow::{
    build_disc, peaceman_well_index, Completion, FlowModel, FlowProps, Well, WellControl,
};
use crate::linalg::SolveOptions;
use crate::mech::bc::{nodes_on_face, traction_loads, DofMap, FaceTraction};
use crate::mech::model::{MaterialProps, MechProblem};
use crate::mech::solve::{solve_mechanics, MechSolveSettings};
use crate::mech::{ContactProps, FracPointState};
use crate::mesh::grid::graded_axis;
use crate::mesh::{FractureMesh, FractureSurface, StructuredGrid};
use crate::units;
use crate::{Error, Result};
use nalgebra::{point, Vector3};

// ---------------------------------------------------------------------------
// Closed-form crack references
// ---------------------------------------------------------------------------

/// Inputs of the classical plane-strain solution for a frictional crack
/// under remote uniaxial compression: a crack of half-length `half_length`
/// inclined at `alpha_deg` to the loading axis slips where the resolved
/// shear exceeds Coulomb friction.
#[derive(Debug, Clone, Copy)]
pub struct SlipReference {
    /// Young's modulus, Pa.
    pub youngs: f64,
    pub poisson: f64,
    /// Coulomb friction coefficient on the crack.
    pub friction: f64,
    /// Magnitude of the remote compressive stress, Pa (positive number).
    pub load: f64,
    /// Angle between the crack and the loading axis, degrees.
    pub alpha_deg: f64,
    /// Crack half-length, m.
    pub half_length: f64,
}

/// Relative tangential displacement across a frictional crack at arc
/// position `x` measured from one tip (`x` in `[0, 2 * half_length]`):
///
/// ```text
///   slip(x) = 4 (1 - nu^2) / E * s sin(a) (cos(a) - f sin(a))
///             * sqrt(l^2 - (x - l)^2)
/// ```
pub fn analytical_slip(x: f64, r: &SlipReference) -> Result<f64> {
    let l = check_arc(x, r.half_length)?;
    let a = r.alpha_deg.to_radians();
    let drive = r.load * a.sin() * (a.cos() - r.friction * a.sin());
    Ok(4.0 * (1.0 - r.poisson * r.poisson) / r.youngs * drive * half_ellipse(x, l))
}

/// Inputs of the classical plane-strain solution for a crack opened by
/// remote tension acting across it.
#[derive(Debug, Clone, Copy)]
pub struct OpeningReference {
    /// Young's modulus, Pa.
    pub youngs: f64,
    pub poisson: f64,
    /// Remote tension normal to the crack, Pa (positive number).
    pub load: f64,
    /// Crack half-length, m.
    pub half_length: f64,
}

/// Normal displacement of one crack face at arc position `x` from one tip
/// (`x` in `[0, 2 * half_length]`); the full opening between the two faces
/// is twice this value. Computed jumps are halved onto the same one-face
/// scale before comparison.
///
/// ```text
///   w(x) = 2 (1 - nu^2) / E * s * sqrt(l^2 - (x - l)^2)
/// ```
pub fn analytical_aperture(x: f64, r: &OpeningReference) -> Result<f64> {
    let l = check_arc(x, r.half_length)?;
    Ok(2.0 * (1.0 - r.poisson * r.poisson) / r.youngs * r.load * half_ellipse(x, l))
}

fn check_arc(x: f64, half_length: f64) -> Result<f64> {
    if !(half_length > 0.0) || !half_length.is_finite() {
        return Err(Error::Config(format!(
            "crack half-length must be positive, got {half_length}"
        )));
    }
    if !x.is_finite() || x < 0.0 || x > 2.0 * half_length {
        return Err(Error::Config(format!(
            "arc position {x} outside the crack [0, {}]",
            2.0 * half_length
        )));
    }
    Ok(half_length)
}

/// sqrt(l^2 - (x - l)^2), clamped against roundoff at the tips.
fn half_ellipse(x: f64, l: f64) -> f64 {
    (l * l - (x - l) * (x - l)).max(0.0).sqrt()
}

// ---------------------------------------------------------------------------
// Profile error norm
// ---------------------------------------------------------------------------

/// Weighted relative L2 distance between a sampled profile and a reference
/// function over the arc interval `span`.
///
/// Each sample `(x_i, v_i)` represents one control volume; its weight is the
/// fraction of the span covered by the Voronoi segment of `x_i` (midpoints
/// between sorted neighbours, span ends at the outer boundaries), so the
/// weights sum to one and the result does not depend on sample order:
///
/// ```text
///   error = sqrt(sum_i w_i (v_i - ref(x_i))^2) / max |ref|
/// ```
///
/// The normalization constant is the largest reference magnitude over the
/// span (dense sampling).
pub fn l2_error<F: Fn(f64) -> f64>(
    profile: &[(f64, f64)],
    span: (f64, f64),
    reference: F,
) -> Result<f64> {
    let (lo, hi) = span;
    if !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
        return Err(Error::Config(format!("invalid profile span [{lo}, {hi}]")));
    }
    if profile.is_empty() {
        return Err(Error::Config("empty profile".into()));
    }
    let slack = 1e-9 * (hi - lo);
    for &(x, v) in profile {
        if !x.is_finite() || !v.is_finite() {
            return Err(Error::Config(format!("non-finite profile sample ({x}, {v})")));
        }
        if x < lo - slack || x > hi + slack {
            return Err(Error::Config(format!(
                "profile sample at {x} outside span [{lo}, {hi}]"
            )));
        }
    }
    let mut samples = profile.to_vec();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));

    let total = hi - lo;
    let n = samples.len();
    let mut sum = 0.0;
    for (i, &(x, v)) in samples.iter().enumerate() {
        let left = if i == 0 { lo } else { 0.5 * (samples[i - 1].0 + x) };
        let right = if i + 1 == n { hi } else { 0.5 * (x + samples[i + 1].0) };
        let w = (right - left) / total;
        let d = v - reference(x);
        sum += w * d * d;
    }

    let m = 2048;
    let mut rmax = 0.0f64;
    for k in 0..=m {
        let x = lo + total * (k as f64) / (m as f64);
        rmax = rmax.max(reference(x).abs());
    }
    if !(rmax > 0.0) || !rmax.is_finite() {
        return Err(Error::Config(
            "reference profile vanishes on the span; relative error undefined".into(),
        ));
    }
    Ok(sum.sqrt() / rmax)
}

// ---------------------------------------------------------------------------
// Convergence fit and reports
// ---------------------------------------------------------------------------

/// Least-squares slope of `log(error)` against `log(h)` over refinement
/// points `(h, error)`. Requires at least three points with positive finite
/// entries and at least two distinct `h`.
pub fn fit_convergence(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Config(format!(
            "convergence fit needs at least three points, got {}",
            points.len()
        )));
    }
    for &(h, e) in points {
        if !(h > 0.0) || !(e > 0.0) || !h.is_finite() || !e.is_finite() {
            return Err(Error::Config(format!(
                "convergence fit needs positive finite (h, error), got ({h}, {e})"
            )));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    if sxx <= 0.0 {
        return Err(Error::Config(
            "convergence fit needs at least two distinct element sizes".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergencePoint {
    /// Element size inside the refined band, m.
    pub h: f64,
    /// Elements per fracture length, when the study is indexed that way.
    pub n_f: Option<usize>,
    /// Relative L2 profile error at this level.
    pub error: f64,
}

/// A named refinement study with its fitted convergence exponent.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub identifier: String,
    /// Crack inclination for studies run per angle.
    pub alpha_deg: Option<f64>,
    pub points: Vec<ConvergencePoint>,
    /// Least-squares slope of log(error) vs log(h).
    pub exponent: f64,
}

impl ConvergenceReport {
    pub fn new(
        identifier: impl Into<String>,
        alpha_deg: Option<f64>,
        points: Vec<ConvergencePoint>,
    ) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.h, p.error)).collect();
        let exponent = fit_convergence(&pairs)?;
        Ok(ConvergenceReport {
            identifier: identifier.into(),
            alpha_deg,
            points,
            exponent,
        })
    }
}

/// Flatten reports into CSV with columns `case,h,n_F,alpha,l2_error`.
/// Floats use 17-significant-digit scientific notation; lines end with LF.
pub fn reports_to_csv(reports: &[ConvergenceReport]) -> String {
    let mut out = String::from("case,h,n_F,alpha,l2_error\n");
    for r in reports {
        for p in &r.points {
            let nf = p.n_f.map(|n| n.to_string()).unwrap_or_default();
            let alpha = r.alpha_deg.map(|a| format!("{a}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.16e},{},{},{:.16e}\n",
                r.identifier, p.h, nf, alpha, p.error
            ));
        }
    }
    out
}

/// Human-readable summary table of refinement studies: one row per level
/// and the fitted exponent on each study's first row.
pub fn reports_to_table(reports: &[ConvergenceReport]) -> String {
    let mut out = format!(
        "{:<24} {:>6} {:>9} {:>5} {:>12} {:>9}\n",
        "case", "alpha", "h", "n_F", "l2_error", "exponent"
    );
    for r in reports {
        for (i, p) in r.points.iter().enumerate() {
            let alpha = r
                .alpha_deg
                .map(|a| format!("{a}"))
                .unwrap_or_else(|| "-".into());
            let nf = p
                .n_f
                .map(|n| n.to_string())
                .unwrap_or_else(|| "-".into());
            let exp = if i == 0 {
                format!("{:.3}", r.exponent)
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{:<24} {:>6} {:>9.4} {:>5} {:>12.5e} {:>9}\n",
                r.identifier, alpha, p.h, nf, p.error, exp
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Mechanics studies: isolated crack in a loaded slab
// ---------------------------------------------------------------------------

/// Which crack response a mechanics study measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechCase {
    /// Frictional sliding under remote compression; profiles carry the
    /// tangential jump magnitude.
    Shear,
    /// Opening under remote tension; profiles carry the one-face normal
    /// displacement (half the normal jump).
    Opening,
}

/// Settings shared by the crack studies.
#[derive(Debug, Clone)]
pub struct MechStudyOptions {
    /// Geometric growth ratio of element sizes away from the refined band.
    pub grading_ratio: f64,
    /// Cap on graded element sizes, m.
    pub max_element: f64,
    /// Rigid-body translation imposed through the supports; computed jumps
    /// must not depend on it.
    pub translation: Vector3<f64>,
    pub solve: SolveOptions,
}

impl Default for MechStudyOptions {
    fn default() -> Self {
        MechStudyOptions {
            grading_ratio: 1.3,
            max_element: 10.0,
            translation: Vector3::zeros(),
            solve: SolveOptions::default(),
        }
    }
}

/// A convergence report together with the per-level jump profiles
/// (element size, per-control-volume `(arc, value)` in meters, sorted by
/// arc) that produced it.
#[derive(Debug, Clone)]
pub struct MechStudy {
    pub report: ConvergenceReport,
    pub profiles: Vec<(f64, Vec<(f64, f64)>)>,
}

/// Slab and crack geometry shared by the mechanics studies: a 200 x 200 x 10 m
/// slab with a vertical crack of length 10 m through its center, loaded by
/// +-10 MPa on the lateral faces under plane-strain supports.
const SLAB_SIDE: f64 = 200.0;
const SLAB_THICKNESS: f64 = 10.0;
const CRACK_HALF_LENGTH: f64 = 5.0;
/// Remote load magnitude, MPa.
const LOAD_MPA: f64 = 10.0;
/// Inclination of the loading axis to the crack in the grid-aligned
/// (conforming) shear study, deg.
const CONFORMING_SHEAR_ALPHA: f64 = 30.0;

const YOUNGS: f64 = 1.0e9;
const POISSON: f64 = 0.25;
const FRICTION: f64 = 0.6;

/// Reference slip profile parameters at inclination `alpha_deg`.
pub fn slip_reference(alpha_deg: f64) -> SlipReference {
    SlipReference {
        youngs: YOUNGS,
        poisson: POISSON,
        friction: FRICTION,
        load: units::mpa_to_pa(LOAD_MPA),
        alpha_deg,
        half_length: CRACK_HALF_LENGTH,
    }
}

/// Reference opening profile parameters (inclination drops out: the load
/// rotates with the crack).
pub fn opening_reference() -> OpeningReference {
    OpeningReference {
        youngs: YOUNGS,
        poisson: POISSON,
        load: units::mpa_to_pa(LOAD_MPA),
        half_length: CRACK_HALF_LENGTH,
    }
}

/// Reference profile value for one case at inclination `alpha_deg`.
///
/// Panics if `x` lies outside the crack; use only on arcs inside
/// `[0, 2 * half_length]`.
pub fn mech_reference_value(case: MechCase, alpha_deg: f64, x: f64) -> f64 {
    match case {
        MechCase::Shear => analytical_slip(x, &slip_reference(alpha_deg))
            .expect("arc inside the crack")
            .abs(),
        MechCase::Opening => {
            analytical_aperture(x, &opening_reference()).expect("arc inside the crack")
        }
    }
}

fn crack_surface(strike_deg: f64) -> FractureSurface {
    FractureSurface {
        center: point![100.0, 100.0, 0.5 * SLAB_THICKNESS],
        strike_deg,
        dip_deg: 90.0,
        length: 2.0 * CRACK_HALF_LENGTH,
        // Taller than the slab so the crack cuts the full thickness.
        height: 4.0 * SLAB_THICKNESS,
        conductivity: units::mdm_to_m3(20.0),
        aperture: 1e-3,
    }
}

/// Grid for the grid-aligned studies: element size `h` tiles the crack
/// exactly (tips on grid nodes) and the crack plane bisects a cell row, with
/// geometric coarsening toward the slab boundary.
fn conforming_grid(h: f64, opts: &MechStudyOptions) -> Result<StructuredGrid> {
    let lo = 100.0 - CRACK_HALF_LENGTH;
    let hi = 100.0 + CRACK_HALF_LENGTH;
    let xs = graded_axis(0.0, SLAB_SIDE, lo, hi, h, opts.grading_ratio, opts.max_element)?;
    let ys = graded_axis(
        0.0,
        SLAB_SIDE,
        lo - 0.5 * h,
        hi + 0.5 * h,
        h,
        opts.grading_ratio,
        opts.max_element,
    )?;
    StructuredGrid::new_tensor(xs, ys, vec![0.0, SLAB_THICKNESS])
}

/// Grid for the inclined-crack studies: a uniformly fine band covers the
/// crack with a two-element margin, rounded up to whole elements so the band
/// spacing is exactly `h`.
fn nonconforming_grid(h: f64, alpha_deg: f64, opts: &MechStudyOptions) -> Result<StructuredGrid> {
    let a = alpha_deg.to_radians();
    let half = |extent: f64| h * ((extent + 2.0 * h) / h).ceil();
    let ex = half(CRACK_HALF_LENGTH * a.cos().abs());
    let ey = half(CRACK_HALF_LENGTH * a.sin().abs());
    let xs = graded_axis(
        0.0,
        SLAB_SIDE,
        100.0 - ex,
        100.0 + ex,
        h,
        opts.grading_ratio,
        opts.max_element,
    )?;
    let ys = graded_axis(
        0.0,
        SLAB_SIDE,
        100.0 - ey,
        100.0 + ey,
        h,
        opts.grading_ratio,
        opts.max_element,
    )?;
    StructuredGrid::new_tensor(xs, ys, vec![0.0, SLAB_THICKNESS])
}

/// Plane-strain supports: both z-faces held in z, plus two bottom corner
/// pins that fix the in-plane rigid modes. The loads are self-equilibrated,
/// so the pins carry only roundoff and set the displacement gauge; the
/// requested rigid translation enters through the prescribed values.
fn crack_supports(grid: &StructuredGrid, t: &Vector3<f64>) -> Result<DofMap> {
    let mut cons: Vec<(usize, usize, f64)> = Vec::new();
    for side in 0..2 {
        for n in nodes_on_face(grid, 2, side) {
            cons.push((n, 2, t.z));
        }
    }
    let a = grid.node_id(0, 0, 0);
    let b = grid.node_id(grid.nx, 0, 0);
    cons.push((a, 0, t.x));
    cons.push((a, 1, t.y));
    cons.push((b, 1, t.y));
    DofMap::new(grid.n_nodes(), &cons)
}

/// Remote-load tractions on the four lateral slab faces, expressed in grid
/// axes (tension positive).
fn crack_loads(case: MechCase, conforming: bool, alpha_deg: f64) -> Vec<FaceTraction> {
    let s = units::mpa_to_pa(LOAD_MPA);
    let a = alpha_deg.to_radians();
    let (sc, ss) = (a.cos(), a.sin());
    let (sxx, syy, sxy) = match (case, conforming) {
        // Compression along an axis inclined at alpha to the grid-aligned
        // crack: sigma = -s d (x) d with d = (cos a, sin a, 0).
        (MechCase::Shear, true) => (-s * sc * sc, -s * ss * ss, -s * ss * sc),
        // Crack inclined in grid axes, compression along x.
        (MechCase::Shear, false) => (-s, 0.0, 0.0),
        // Tension across the grid-aligned crack.
        (MechCase::Opening, true) => (0.0, s, 0.0),
        // Tension along the inclined crack normal n = (sin a, -cos a, 0):
        // sigma = s n (x) n, so the physical problem is the same at every
        // inclination and only the grid orientation varies.
        (MechCase::Opening, false) => (s * ss * ss, s * sc * sc, -s * ss * sc),
    };
    vec![
        FaceTraction { axis: 0, side: 1, traction: [sxx, sxy, 0.0] },
        FaceTraction { axis: 0, side: 0, traction: [-sxx, -sxy, 0.0] },
        FaceTraction { axis: 1, side: 1, traction: [sxy, syy, 0.0] },
        FaceTraction { axis: 1, side: 0, traction: [-sxy, -syy, 0.0] },
    ]
}

/// Solve one crack problem and return the per-control-volume jump profile
/// `(arc, value)` sorted by arc: tangential jump magnitude for the shear
/// case, one-face normal displacement (half jump) for the opening case.
fn crack_profile(
    case: MechCase,
    grid: &StructuredGrid,
    strike_deg: f64,
    loads: &[FaceTraction],
    opts: &MechStudyOptions,
) -> Result<Vec<(f64, f64)>> {
    let fmesh = FractureMesh::build(grid, vec![crack_surface(strike_deg)])?;
    if fmesh.n_cvs() == 0 {
        return Err(Error::Geometry("crack cuts no cells".into()));
    }
    let material = MaterialProps {
        youngs: YOUNGS,
        poisson: POISSON,
        biot: 1.0,
    };
    let contact = vec![ContactProps {
        friction: FRICTION,
        dilation: 0.0,
        hardening: 0.0,
    }];
    let prob = MechProblem::new(grid, &fmesh, material, contact)?;
    let dofs = crack_supports(grid, &opts.translation)?;
    let f_ext = traction_loads(grid, loads);
    let states = vec![FracPointState::new(0.0); fmesh.n_cvs()];
    let settings = MechSolveSettings {
        solve: opts.solve.clone(),
        ..Default::default()
    };
    let p_m = vec![0.0; grid.n_cells()];
    let p_f = vec![0.0; fmesh.n_cvs()];
    let sol = solve_mechanics(&prob, grid, &dofs, &f_ext, &p_m, &p_f, &states, &settings)?;

    let mut prof: Vec<(f64, f64)> = fmesh
        .cvs
        .iter()
        .zip(&sol.jumps)
        .map(|(cv, j)| {
            let v = match case {
                MechCase::Shear => j.y.hypot(j.z),
                MechCase::Opening => 0.5 * j.x,
            };
            (cv.arc, v)
        })
        .collect();
    prof.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(prof)
}

/// Jump profile of one grid-aligned run with `n_f` elements per crack
/// length. Returns the band element size together with the profile.
pub fn conforming_profile(
    case: MechCase,
    n_f: usize,
    opts: &MechStudyOptions,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if n_f == 0 || n_f % 2 != 0 {
        return Err(Error::Config(format!(
            "elements per crack length must be even and positive so the crack \
             plane bisects a cell row, got {n_f}"
        )));
    }
    let h = 2.0 * CRACK_HALF_LENGTH / n_f as f64;
    let grid = conforming_grid(h, opts)?;
    let alpha = match case {
        MechCase::Shear => CONFORMING_SHEAR_ALPHA,
        MechCase::Opening => 0.0,
    };
    let loads = crack_loads(case, true, alpha);
    let prof = crack_profile(case, &grid, 0.0, &loads, opts)?;
    Ok((h, prof))
}

/// Jump profile of one inclined-crack run at band element size `h` and
/// inclination `alpha_deg`.
pub fn nonconforming_profile(
    case: MechCase,
    h: f64,
    alpha_deg: f64,
    opts: &MechStudyOptions,
) -> Result<Vec<(f64, f64)>> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("element size must be positive, got {h}")));
    }
    let grid = nonconforming_grid(h, alpha_deg, opts)?;
    let loads = crack_loads(case, false, alpha_deg);
    crack_profile(case, &grid, alpha_deg, &loads, opts)
}

fn mech_case_error(case: MechCase, alpha_deg: f64, prof: &[(f64, f64)]) -> Result<f64> {
    l2_error(prof, (0.0, 2.0 * CRACK_HALF_LENGTH), |x| {
        mech_reference_value(case, alpha_deg, x)
    })
}

/// Refinement study of a grid-aligned crack over `n_f_levels` elements per
/// crack length.
pub fn run_mech_conforming(
    case: MechCase,
    n_f_levels: &[usize],
    opts: &MechStudyOptions,
) -> Result<MechStudy> {
    let alpha = match case {
        MechCase::Shear => CONFORMING_SHEAR_ALPHA,
        MechCase::Opening => 0.0,
    };
    let mut points = Vec::new();
    let mut profiles = Vec::new();
    for &n_f in n_f_levels {
        let (h, prof) = conforming_profile(case, n_f, opts)?;
        let error = mech_case_error(case, alpha, &prof)?;
        log::info!(
            "{case:?} conforming n_F {n_f}: {} control volumes, error {error:.4e}",
            prof.len()
        );
        points.push(ConvergencePoint { h, n_f: Some(n_f), error });
        profiles.push((h, prof));
    }
    let name = match case {
        MechCase::Shear => "shear-conforming",
        MechCase::Opening => "opening-conforming",
    };
    Ok(MechStudy {
        report: ConvergenceReport::new(name, None, points)?,
        profiles,
    })
}

/// Refinement study of an inclined crack: one report per inclination, each
/// fitted over `h_levels`.
pub fn run_mech_nonconforming(
    case: MechCase,
    h_levels: &[f64],
    alphas_deg: &[f64],
    opts: &MechStudyOptions,
) -> Result<Vec<MechStudy>> {
    let name = match case {
        MechCase::Shear => "shear-nonconforming",
        MechCase::Opening => "opening-nonconforming",
    };
    let mut studies = Vec::new();
    for &alpha in alphas_deg {
        let mut points = Vec::new();
        let mut profiles = Vec::new();
        for &h in h_levels {
            let prof = nonconforming_profile(case, h, alpha, opts)?;
            let error = mech_case_error(case, alpha, &prof)?;
            log::info!(
                "{case:?} nonconforming h {h} alpha {alpha}: {} control volumes, \
                 error {error:.4e}",
                prof.len()
            );
            points.push(ConvergencePoint { h, n_f: None, error });
            profiles.push((h, prof));
        }
        studies.push(MechStudy {
            report: ConvergenceReport::new(name, Some(alpha), points)?,
            profiles,
        });
    }
    Ok(studies)
}

// ---------------------------------------------------------------------------
// Flow study: well-driven reservoir with one embedded fracture
// ---------------------------------------------------------------------------

/// Flow-study constants: a 200 x 200 x 10 m reservoir with a 160 m fracture
/// striking at 140 deg through its center, one injector in the upper-left
/// corner (BHP 15 MPa) and producers in the other three corners (BHP 5 MPa),
/// initial pressure 10 MPa, no-flow boundaries.
const FLOW_FRACTURE_LENGTH: f64 = 160.0;
const FLOW_STRIKE_DEG: f64 = 140.0;
const FLOW_MATRIX_MD: f64 = 10.0;
const FLOW_POROSITY: f64 = 0.2;
const FLOW_P0_MPA: f64 = 10.0;
const FLOW_INJECTOR_MPA: f64 = 15.0;
const FLOW_PRODUCER_MPA: f64 = 5.0;
const FLOW_WELL_RADIUS: f64 = 0.1;

fn flow_surface() -> FractureSurface {
    FractureSurface {
        center: point![100.0, 100.0, 0.5 * SLAB_THICKNESS],
        strike_deg: FLOW_STRIKE_DEG,
        dip_deg: 90.0,
        length: FLOW_FRACTURE_LENGTH,
        height: 4.0 * SLAB_THICKNESS,
        conductivity: units::mdm_to_m3(20.0),
        aperture: 1e-3,
    }
}

/// Build the flow model on a uniform grid of element size `h` (which must
/// tile the 200 m side). Returns the model and the arc coordinates of the
/// fracture control volumes (indexed like the fracture unknowns).
fn flow_model(h: f64) -> Result<(FlowModel, Vec<f64>)> {
    let n = (SLAB_SIDE / h).round() as usize;
    if n == 0 || (n as f64 * h - SLAB_SIDE).abs() > 1e-9 * SLAB_SIDE {
        return Err(Error::Config(format!(
            "element size {h} does not tile the {SLAB_SIDE} m domain"
        )));
    }
    let grid = StructuredGrid::new(n, n, 1, h, h, SLAB_THICKNESS, point![0.0, 0.0, 0.0])?;
    let fmesh = FractureMesh::build(&grid, vec![flow_surface()])?;
    let arcs: Vec<f64> = fmesh.cvs.iter().map(|cv| cv.arc).collect();

    let k = units::md_to_m2(FLOW_MATRIX_MD);
    let perm = Vector3::new(k, k, k);
    let disc = build_disc(&grid, &fmesh, &perm)?;
    let props = FlowProps {
        perm,
        porosity: FLOW_POROSITY,
        fluid_compressibility: units::per_mpa_to_per_pa(4.5e-4),
        bulk_modulus: YOUNGS,
        biot: 1.0,
        viscosity: units::cp_to_pa_s(1.0),
        density: 1000.0,
        gravity: Vector3::zeros(),
    };
    let wi = peaceman_well_index(h, h, SLAB_THICKNESS, k, k, FLOW_WELL_RADIUS);
    let corner = |i: usize, j: usize| grid.cell_id(i, j, 0);
    let well = |name: &str, cell: usize, bhp_mpa: f64| Well {
        name: name.into(),
        control: WellControl::Bhp(units::mpa_to_pa(bhp_mpa)),
        completions: vec![Completion { cv: cell, wi }],
    };
    let wells = vec![
        well("INJ", corner(0, n - 1), FLOW_INJECTOR_MPA),
        well("P1", corner(0, 0), FLOW_PRODUCER_MPA),
        well("P2", corner(n - 1, 0), FLOW_PRODUCER_MPA),
        well("P3", corner(n - 1, n - 1), FLOW_PRODUCER_MPA),
    ];
    let model = FlowModel::new(disc, props, wells)?;
    Ok((model, arcs))
}

fn fracture_pressure_profile(model: &FlowModel, arcs: &[f64], p: &[f64]) -> Vec<(f64, f64)> {
    let mut prof: Vec<(f64, f64)> = arcs
        .iter()
        .enumerate()
        .map(|(i, &arc)| (arc, p[model.disc.frac_dof(i)]))
        .collect();
    prof.sort_by(|a, b| a.0.total_cmp(&b.0));
    prof
}

/// Steady-state fracture pressure profile `(arc, Pa)` on a uniform grid of
/// element size `h`, sorted by arc.
pub fn flow_steady_profile(h: f64, solve: &SolveOptions) -> Result<Vec<(f64, f64)>> {
    let (model, arcs) = flow_model(h)?;
    let p0 = vec![units::mpa_to_pa(FLOW_P0_MPA); model.n_dofs()];
    let p = model.steady_state(&p0, solve)?;
    Ok(fracture_pressure_profile(&model, &arcs, &p))
}

/// Piecewise-linear interpolant of a profile sorted by arc, clamped to the
/// end values outside the sampled range.
pub fn interp_profile(samples: &[(f64, f64)]) -> impl Fn(f64) -> f64 + '_ {
    move |x: f64| {
        let n = samples.len();
        debug_assert!(n > 0);
        if x <= samples[0].0 {
            return samples[0].1;
        }
        if x >= samples[n - 1].0 {
            return samples[n - 1].1;
        }
        let i = samples.partition_point(|s| s.0 < x);
        let (x0, y0) = samples[i - 1];
        let (x1, y1) = samples[i];
        let dx = x1 - x0;
        if dx <= 0.0 {
            y0
        } else {
            y0 + (y1 - y0) * (x - x0) / dx
        }
    }
}

/// Result of the steady-flow refinement study.
#[derive(Debug, Clone)]
pub struct FlowStudy {
    pub report: ConvergenceReport,
    /// Steady profiles per level: (h, per-CV (arc, Pa)).
    pub profiles: Vec<(f64, Vec<(f64, f64)>)>,
    /// The fine-grid reference profile (arc, Pa).
    pub reference: Vec<(f64, f64)>,
}

/// Steady-flow refinement study: compare fracture pressure profiles on the
/// `h_levels` grids against a self-computed reference at `reference_h`.
/// Pressures are normalized by the initial reservoir pressure before the
/// error norm.
pub fn run_flow_convergence(
    h_levels: &[f64],
    reference_h: f64,
    solve: &SolveOptions,
) -> Result<FlowStudy> {
    let reference = flow_steady_profile(reference_h, solve)?;
    log::info!(
        "flow reference h {reference_h}: {} fracture control volumes",
        reference.len()
    );
    let p0 = units::mpa_to_pa(FLOW_P0_MPA);
    let scaled_ref: Vec<(f64, f64)> = reference.iter().map(|&(a, p)| (a, p / p0)).collect();
    let span = (0.0, FLOW_FRACTURE_LENGTH);
    let mut points = Vec::new();
    let mut profiles = Vec::new();
    for &h in h_levels {
        let prof = flow_steady_profile(h, solve)?;
        let scaled: Vec<(f64, f64)> = prof.iter().map(|&(a, p)| (a, p / p0)).collect();
        let interp = interp_profile(&scaled_ref);
        let error = l2_error(&scaled, span, interp)?;
        log::info!("flow steady h {h}: {} control volumes, error {error:.4e}", prof.len());
        points.push(ConvergencePoint { h, n_f: None, error });
        profiles.push((h, prof));
    }
    Ok(FlowStudy {
        report: ConvergenceReport::new("flow-steady", None, points)?,
        profiles,
        reference,
    })
}

/// Transient fracture-pressure profiles at the requested sample times plus
/// the steady limit, all on one grid of element size `h`.
#[derive(Debug, Clone)]
pub struct FlowTransient {
    /// (time in days, profile (arc, Pa)) per requested sample, in time order.
    pub at_days: Vec<(f64, Vec<(f64, f64)>)>,
    pub steady: Vec<(f64, f64)>,
}

/// March the flow model with backward-Euler steps (capped at `max_dt_days`)
/// through the sorted `sample_days`, recording the fracture profile at each,
/// then solve the steady limit.
pub fn run_flow_transient(
    h: f64,
    sample_days: &[f64],
    max_dt_days: f64,
    solve: &SolveOptions,
) -> Result<FlowTransient> {
    if !(max_dt_days > 0.0) {
        return Err(Error::Scheduling(format!(
            "time step must be positive, got {max_dt_days}"
        )));
    }
    let mut days: Vec<f64> = sample_days.to_vec();
    days.sort_by(f64::total_cmp);
    if days.first().is_some_and(|&d| d <= 0.0) {
        return Err(Error::Scheduling("sample times must be positive".into()));
    }
    let (model, arcs) = flow_model(h)?;
    let mut p = vec![units::mpa_to_pa(FLOW_P0_MPA); model.n_dofs()];
    let mut t = 0.0;
    let mut at_days = Vec::new();
    for &target in &days {
        while t < target - 1e-9 {
            let dt = max_dt_days.min(target - t);
            p = model.step(&p, units::days_to_s(dt), solve)?;
            t += dt;
        }
        at_days.push((target, fracture_pressure_profile(&model, &arcs, &p)));
    }
    let steady = model.steady_state(&p, solve)?;
    Ok(FlowTransient {
        at_days,
        steady: fracture_pressure_profile(&model, &arcs, &steady),
    })
}
