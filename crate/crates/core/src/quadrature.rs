//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex-valued
//! integrands on a finite interval.
//!
//! The interval is first cut at the caller's breakpoints and into a minimum
//! number of panels, then the panel with the largest error estimate is
//! bisected until the summed estimate drops below the absolute tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

// Published 30-digit nodes and weights, kept verbatim.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    /// Sum of the per-panel |Kronrod − Gauss| differences.
    pub error: f64,
    pub panels: usize,
}

/// Adaptive integration settings.
#[derive(Debug, Clone)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub max_panels: usize,
    pub min_panels: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive {
            abs_tol: 1e-10,
            max_panels: 20_000,
            min_panels: 16,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F>(f: &F, a: f64, b: f64) -> Panel
where
    F: Fn(f64) -> Complex64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * w;
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    Panel { a, b, value, error }
}

impl Adaptive {
    /// Integrates `f` over `[a, b]`, splitting first at every breakpoint that
    /// falls strictly inside the interval.
    ///
    /// On failure (panel cap reached or panels too narrow to bisect) the best
    /// available estimate is returned in `Err`.
    pub fn integrate<F>(&self, f: F, a: f64, b: f64, breakpoints: &[f64]) -> Result<Estimate, Estimate>
    where
        F: Fn(f64) -> Complex64,
    {
        assert!(b > a, "empty integration interval [{a}, {b}]");
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&x| x > a && x < b)
            .collect();
        cuts.push(a);
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let total_len = b - a;
        let mut heap = BinaryHeap::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let pieces = ((self.min_panels as f64) * (hi - lo) / total_len).ceil().max(1.0) as usize;
            let step = (hi - lo) / pieces as f64;
            for k in 0..pieces {
                let pa = lo + step * k as f64;
                let pb = if k + 1 == pieces { hi } else { lo + step * (k + 1) as f64 };
                heap.push(gauss_kronrod(&f, pa, pb));
            }
        }

        let min_width = total_len * 1e-14;
        loop {
            let error: f64 = heap.iter().map(|p| p.error).sum();
            if error <= self.abs_tol {
                return Ok(summarize(&heap));
            }
            if heap.len() >= self.max_panels {
                return Err(summarize(&heap));
            }
            let worst = heap.pop().expect("heap holds at least one panel");
            if worst.b - worst.a < min_width {
                heap.push(worst);
                return Err(summarize(&heap));
            }
            let mid = 0.5 * (worst.a + worst.b);
            heap.push(gauss_kronrod(&f, worst.a, mid));
            heap.push(gauss_kronrod(&f, mid, worst.b));
        }
    }

    /// Real-valued convenience wrapper around [`Adaptive::integrate`].
    pub fn integrate_real<F>(&self, f: F, a: f64, b: f64, breakpoints: &[f64]) -> Result<f64, f64>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate(|x| Complex64::new(f(x), 0.0), a, b, breakpoints)
            .map(|e| e.value.re)
            .map_err(|e| e.value.re)
    }
}

fn summarize(heap: &BinaryHeap<Panel>) -> Estimate {
    // Sum in position order so the result does not depend on heap layout.
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().fold(Complex64::new(0.0, 0.0), |acc, p| acc + p.value);
    let error = panels.iter().map(|p| p.error).sum();
    Estimate {
        value,
        error,
        panels: panels.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let q = Adaptive::default();
        let v = q.integrate_real(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, &[]).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_kernel() {
        let q = Adaptive {
            min_panels: 400,
            ..Adaptive::default()
        };
        // ∫_0^π e^{j 50 x} dx = (e^{j 50π} − 1)/(j 50) = 0
        let e = q.integrate(|x| Complex64::new(0.0, 50.0 * x).exp(), 0.0, PI, &[]).unwrap();
        assert!(e.value.norm() < 1e-12);
    }

    #[test]
    fn kink_at_breakpoint() {
        let q = Adaptive::default();
        let v = q.integrate_real(|x| (-(x - 1.0).abs()).exp(), 0.0, 3.0, &[1.0]).unwrap();
        let exact = (1.0 - (-1.0f64).exp()) + (1.0 - (-2.0f64).exp());
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn panel_cap_reports_failure() {
        let q = Adaptive {
            abs_tol: 1e-14,
            max_panels: 4,
            min_panels: 1,
        };
        assert!(q.integrate_real(|x| x.sqrt(), 0.0, 1.0, &[]).is_err());
    }
}
