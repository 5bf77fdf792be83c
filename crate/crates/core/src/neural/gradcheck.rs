//! Central finite-difference check of analytic gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::network::NetworkModel;
use super::tensor::Tensor;
use super::{Mode, Result};

/// Agreement between the analytic and numeric derivative of one scalar
/// parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamCheck {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
    /// Step actually used for this parameter.
    pub step: f64,
    /// False when even the smallest step crossed a kink, so `numeric` is a
    /// secant across two pieces rather than a derivative.
    pub smooth: bool,
}

/// `|a - n| / max(|a|, |n|, floor)`. The floor keeps parameters with
/// vanishing gradients from dividing rounding noise by zero.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_FLOOR: f64 = 1e-6;

/// Times the step is divided by ten when `w +- h` lands on a different side
/// of a relu or max-pool kink than `w`.
pub const MAX_REFINEMENTS: u32 = 2;

/// Compares every parameter gradient against `(L(w+h) - L(w-h)) / 2h`.
/// In training mode each loss evaluation reseeds the dropout generator so
/// the same mask is used throughout.
///
/// The step starts at `step * max(1, |w|)`. If either probe changes a relu
/// sign or a max-pool winner, the difference quotient would straddle a
/// kink, so the step shrinks tenfold up to [`MAX_REFINEMENTS`] times.
pub fn check_gradients(
    model: &NetworkModel,
    input: &Tensor,
    target: &[f64],
    mode: Mode,
    mask_seed: u64,
    step: f64,
) -> Result<Vec<ParamCheck>> {
    let mask = || ChaCha8Rng::seed_from_u64(mask_seed);
    let (_, grads) = model.compute_gradients(input, target, mode, &mut mask())?;
    let (_, base_branches) = model.loss_and_branches(input, target, mode, &mut mask())?;
    let analytic = grads.flat();
    let base = model.flat_params();
    (0..analytic.len())
        .into_par_iter()
        .map(|i| {
            let mut probe = model.clone();
            let mut eval = |value: f64| {
                *probe.flat_param_mut(i).expect("index in range") = value;
                probe.loss_and_branches(input, target, mode, &mut mask())
            };
            let mut h = step * base[i].abs().max(1.0);
            let mut refinements = 0;
            loop {
                let (up, up_branches) = eval(base[i] + h)?;
                let (down, down_branches) = eval(base[i] - h)?;
                let smooth = up_branches == base_branches && down_branches == base_branches;
                if smooth || refinements == MAX_REFINEMENTS {
                    let numeric = (up - down) / (2.0 * h);
                    return Ok(ParamCheck {
                        index: i,
                        analytic: analytic[i],
                        numeric,
                        rel_error: relative_error(analytic[i], numeric, DEFAULT_FLOOR),
                        step: h,
                        smooth,
                    });
                }
                h /= 10.0;
                refinements += 1;
            }
        })
        .collect()
}
