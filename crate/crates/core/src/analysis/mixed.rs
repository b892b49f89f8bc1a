use super::quadrature::{composite, gauss_legendre};
use crate::error::{Error, Result};
use crate::fbm::{cumulative, CirculantSampler, HurstParam};
use crate::rng::StreamKey;
use rand::Rng;

/// Smallest subgrid factor accepted by the statistic.
pub const MIN_SUBGRID: usize = 8;

const GAUSS_ORDER: usize = 8;
const MAX_LEVEL: u32 = 12;
const CONVERGED: f64 = 1e-9;
const ACCEPTABLE: f64 = 1e-6;

/// `S = sum_k int_{t_{k-1}}^{t_k} (Bt_s - Bt_{t_{k-1}}) dB_s` from the values
/// of `B` and `Bt` on the `n * sub` grid, each inner integral taken as a
/// left-point sum over the subgrid.
pub fn mixed_covariation_from_paths(
    b: &[f64],
    b_tilde: &[f64],
    n: usize,
    sub: usize,
) -> Result<f64> {
    let len = n * sub + 1;
    if b.len() != len || b_tilde.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "paths of length {} and {} for a grid of {len} points",
            b.len(),
            b_tilde.len()
        )));
    }
    let mut total = 0.0;
    for k in 0..n {
        let base = k * sub;
        let anchor = b_tilde[base];
        for i in base..base + sub {
            total += (b_tilde[i] - anchor) * (b[i + 1] - b[i]);
        }
    }
    Ok(total)
}

/// Draws the two independent components of the statistic on the `n * sub` grid.
#[derive(Debug, Clone)]
pub struct MixedSampler {
    n: usize,
    sub: usize,
    fgn: CirculantSampler,
}

impl MixedSampler {
    pub fn new(n: usize, sub: usize, hurst: HurstParam, horizon: f64) -> Result<Self> {
        if sub < MIN_SUBGRID {
            return Err(Error::domain(format!(
                "subgrid factor {sub} below the minimum {MIN_SUBGRID}"
            )));
        }
        if n == 0 {
            return Err(Error::domain("n must be positive"));
        }
        Ok(Self {
            n,
            sub,
            fgn: CirculantSampler::new(n * sub, hurst, horizon)?,
        })
    }

    /// Values of `(B, Bt)`, from components 0 and 1 of the stream.
    pub fn paths(&self, seed: u64, path_index: u64) -> (Vec<f64>, Vec<f64>) {
        let key = StreamKey::new(seed, path_index, 0);
        let b = cumulative(&self.fgn.sample(&mut key.open(0)));
        let bt = cumulative(&self.fgn.sample(&mut key.with_component(1).open(0)));
        (b, bt)
    }

    pub fn paths_with<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let b = cumulative(&self.fgn.sample(rng));
        let bt = cumulative(&self.fgn.sample(rng));
        (b, bt)
    }

    pub fn sample(&self, seed: u64, path_index: u64) -> f64 {
        let (b, bt) = self.paths(seed, path_index);
        self.statistic(&b, &bt)
    }

    /// The statistic with the roles of the two components exchanged.
    pub fn sample_swapped(&self, seed: u64, path_index: u64) -> f64 {
        let (b, bt) = self.paths(seed, path_index);
        self.statistic(&bt, &b)
    }

    fn statistic(&self, b: &[f64], bt: &[f64]) -> f64 {
        mixed_covariation_from_paths(b, bt, self.n, self.sub).expect("sampler-sized paths")
    }
}

/// One draw of the statistic for `F = 1`.
pub fn mixed_covariation_stat<R: Rng + ?Sized>(
    n: usize,
    hurst: HurstParam,
    horizon: f64,
    sub: usize,
    rng: &mut R,
) -> Result<f64> {
    let sampler = MixedSampler::new(n, sub, hurst, horizon)?;
    let (b, bt) = sampler.paths_with(rng);
    mixed_covariation_from_paths(&b, &bt, n, sub)
}

/// `E[S^2] = alpha_H h^{4H} [n J(0) + 2 sum_{L>=1} (n - L) J(L)]` with
/// `J(L) = int_L^{L+1} int_0^1 E[(Bt_t - Bt_L)(Bt_s - Bt_0)] |t - s|^{2H-2} ds dt`
/// evaluated by composite Gauss–Legendre quadrature.
pub fn mixed_second_moment_quadrature(n: usize, hurst: HurstParam, horizon: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let cells = cell_integrals(n, hurst)?;
    let mut sum = n as f64 * cells[0];
    for (lag, j) in cells.iter().enumerate().skip(1) {
        sum += 2.0 * (n - lag) as f64 * j;
    }
    let h = horizon / n as f64;
    Ok(hurst.alpha() * h.powf(4.0 * hurst.value()) * sum)
}

/// `J(0), ..., J(count - 1)`.
pub(crate) fn cell_integrals(count: usize, hurst: HurstParam) -> Result<Vec<f64>> {
    let rule = gauss_legendre(GAUSS_ORDER);
    (0..count)
        .map(|lag| {
            let mut prev = cell_integral(lag, hurst, 0, &rule);
            let mut change = f64::INFINITY;
            for level in 1..=MAX_LEVEL {
                let next = cell_integral(lag, hurst, level, &rule);
                change = ((next - prev) / next).abs();
                prev = next;
                if change < CONVERGED {
                    return Ok(next);
                }
            }
            if change <= ACCEPTABLE {
                Ok(prev)
            } else {
                Err(Error::Quadrature(format!(
                    "cell integral at lag {lag} changed by {change:e} after {MAX_LEVEL} levels"
                )))
            }
        })
        .collect()
}

/// Integrand `E[(Bt_t - Bt_L)(Bt_s - Bt_0)]`.
fn kernel(lag: f64, t: f64, s: f64, two_h: f64) -> f64 {
    0.5 * (t.powf(two_h) + (lag - s).abs().powf(two_h)
        - (t - s).abs().powf(two_h)
        - lag.powf(two_h))
}

/// `J(L)` with `2^level` panels per direction. In `u = t - s` the cell splits
/// into `u in [L-1, L]`, `s in [L-u, 1]` and `u in [L, L+1]`, `s in [0, L+1-u]`.
/// Pieces touching `u = 0` use `u = v^p`, `p = 1/(2H-1)`, which cancels the
/// weight `u^{2H-2}`.
fn cell_integral(lag: usize, hurst: HurstParam, level: u32, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let two_h = 2.0 * hurst.value();
    let l = lag as f64;
    let panels = 1usize << level;
    let u_nodes = composite(rule, 0.0, 1.0, panels);
    let w_nodes = composite(rule, 0.0, 1.0, panels);
    let p = 1.0 / (two_h - 1.0);

    // inner integral over s in [a, b], graded at both ends by s = a + (b-a)(3w^2 - 2w^3)
    let inner = |u: f64, a: f64, b: f64| -> f64 {
        let width = b - a;
        w_nodes
            .iter()
            .map(|&(w, ww)| {
                let g = w * w * (3.0 - 2.0 * w);
                let dg = 6.0 * w * (1.0 - w);
                let s = a + width * g;
                ww * width * dg * kernel(l, s + u, s, two_h)
            })
            .sum()
    };
    // u = offset + x for x in [0, 1]
    let piece = |offset: f64, bounds: &dyn Fn(f64) -> (f64, f64), singular: bool| -> f64 {
        u_nodes
            .iter()
            .map(|&(x, wx)| {
                let (x, weight) = if singular {
                    (x.powf(p), wx * p)
                } else {
                    let u = offset + x;
                    (x, wx * u.abs().powf(two_h - 2.0))
                };
                let u = offset + x;
                let (a, b) = bounds(u);
                weight * inner(u, a, b)
            })
            .sum()
    };

    let upper = |u: f64| (0.0, l + 1.0 - u);
    if lag == 0 {
        return 2.0 * piece(0.0, &upper, true);
    }
    let lower = |u: f64| (l - u, 1.0);
    piece(l - 1.0, &lower, lag == 1) + piece(l, &upper, false)
}
