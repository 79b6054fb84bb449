//! Pinned numeric tolerances shared by the library's verification routines,
//! the CLI `report` command, and the acceptance suite.
//!
//! Each constant documents *why* its value is safe for the quantity it
//! guards; loosening one of them is an API-visible change.

/// Maximum tracked rounding error allowed in a normalized coefficient table.
///
/// Tables are filled at 128- or 256-bit mantissa precision; the propagated
/// error bound per entry stays below 1e-30 in practice, so 1e-20 is a loose
/// ceiling that still catches any structural mistake immediately.
pub const TABLE_ERR_MAX: f64 = 1e-20;

/// Relative agreement demanded between the Parseval evaluation of the
/// restricted norm and direct quadrature of ∫₀¹ y^k |f|² dx.
///
/// Both sides are f64 assemblies of ~10³ terms, so 1e-8 leaves three orders
/// of headroom above accumulated roundoff while being far below any honest
/// discrepancy a wrong window or scale would produce.
pub const QUAD_REL_TOL: f64 = 1e-8;

/// The three symmetric-square L-value estimators must pairwise agree within
/// this multiplicative factor.
pub const LVALUE_SPREAD_MAX: f64 = 1.5;

/// |log L(1, sym²f) − Σ_{p≤k} λ(p²)/p| must stay inside this band.
pub const PROXY_GAP_BAND: f64 = 2.0;

/// Lower bound check for the symmetric-square L-value: L ≥ 1/(10 ln k).
pub const LVALUE_FLOOR_FACTOR: f64 = 10.0;

/// Short-interval sums of λ(n)² may exceed the multiplicative comparator by
/// at most this factor on the default scan grid.
pub const SHIU_RATIO_MAX: f64 = 5.0;

/// Supremum of the restricted norm over the default height grid.
pub const SWEEP_SUP_MAX: f64 = 10.0;

/// Exponent offset for the top of the default height grid: y ranges over a
/// geometric grid from 1/k to k^{1/2 − SWEEP_DELTA}.
pub const SWEEP_DELTA: f64 = 0.1;

/// Number of points in the default height grid.
pub const SWEEP_POINTS: usize = 32;

/// Band for the mean of the restricted norm at y = 1 taken over all
/// available forms. Individual small weights legitimately sit above the
/// conjectural limit (weight 12 alone evaluates to ≈ 3.38), so the band
/// constrains the aggregate, not each term.
pub const UNIT_MEAN_BAND: (f64, f64) = (0.3, 3.0);

/// 3/π, the conjectural large-weight limit of the restricted norm at y = 1.
/// Reported as a diagnostic only; no test asserts convergence to it.
pub const THREE_OVER_PI: f64 = 0.954_929_658_551_372;

/// Default certified-tail budget for truncation windows.
pub const WINDOW_EPS_DEFAULT: f64 = 1e-12;

/// Root isolation refines a uniform sign grid until every eigenvalue of T_2
/// sits in its own cell; if the normalized resolution (cell width in λ(2)
/// units) drops below this without separating them, the pair is reported as
/// a collision instead of being silently split further.
pub const EIGEN_GAP_MIN: f64 = 1e-6;

/// Maximum accepted residual, in λ-normalized units, when the eigenvector
/// extracted from T_2 is pushed through T_3: a genuine simultaneous
/// eigenform leaves a residual at the precision floor, orders of magnitude
/// below this.
pub const SIMULTANEITY_MAX: f64 = 1e-8;

/// Band for the ratio between the two closed-form bounds that sandwich the
/// Parseval term weight: the ratio equals k^{k−1/2} e^{−k}/Γ(k)
/// = 1/(√(2π)·e^{θ(k)}) ∈ (0.396, 0.399) for every k ≥ 12, independent of
/// the evaluation point, so [0.35, 0.45] is a strict but safe check.
pub const WEIGHT_BOUND_RATIO_BAND: (f64, f64) = (0.35, 0.45);

/// Petersson-constant round trip: |log C² + log Γ(k) + log L − log 2π²|.
pub const PETERSSON_ROUNDTRIP_TOL: f64 = 1e-10;

/// Growth probe: max_{n≤N} λ(n)²/n^{1/5} at the last checkpoint may exceed
/// the first checkpoint by at most this factor (stabilization, not decay:
/// prefix maxima cannot decrease).
pub const GROWTH_PROBE_FACTOR: f64 = 2.0;

/// Binned-contribution envelope: bins must fall under
/// K · count_j · exp(−j²/16) with K calibrated on the head bins times this
/// safety factor.
pub const BIN_ENVELOPE_SAFETY: f64 = 10.0;
