//! Adaptive explicit Runge-Kutta stepper: Verner's efficient 9(8) pair
//! (16 stages, propagating order 9, embedded order 8 for error control).

use crate::error::{Error, ErrorCode, Result};

pub const STAGES: usize = 16;
pub const ERR_EXP: f64 = 1.0 / 9.0;

#[rustfmt::skip]
pub const A: [[f64; STAGES]; STAGES] = [
    [0.0; 16],
    [0.3571e-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-3.833_735_636_677_017e-2, 0.137_397_637_279_444_32, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.714_760_534_225_28e-2, 0.0, 0.111_442_816_026_758_42, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.674_764_429_871_505, 0.0, -9.982_382_134_885_293, 7.921_017_705_013_789, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.242_104_050_577_351e-2, 0.0, 0.0, 0.179_691_118_917_595_32, 6.237_879_371_938_568e-4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.159_249_222_364_763_22, 0.0, 0.0, -0.429_842_987_724_108_7, 6.665_266_542_726_088e-2, 0.757_805_152_571_522, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [7.283_333_333_333_333e-2, 0.0, 0.0, 0.0, 0.0, 0.335_934_459_066_510_37, 0.246_732_207_600_156_3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.729755859375e-1, 0.0, 0.0, 0.0, 0.0, 0.334_800_972_969_933_33, 0.118_415_823_905_066_65, -0.345673828125e-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [4.911_213_663_452_096_4e-2, 0.0, 0.0, 0.0, 0.0, 3.983_857_361_308_652e-2, 0.106_967_528_893_935_49, -2.174_259_165_458_647_7e-2, -0.105_595_647_486_956_49, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-2.707_988_818_641_280_5e-2, 0.0, 0.0, 0.0, 0.0, 0.333e-1, -0.164_552_607_003_605_72, 3.428_266_306_497_39e-2, 0.158_526_406_443_922_1, 0.218_523_425_681_122_5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.584_657_769_108_862_5e-2, 0.0, 0.0, 0.0, 0.0, 9.166_533_166_672_539e-2, 0.239_239_965_552_362_7, 1.023_834_712_248_415e-2, -2.679_331_322_859_542_6e-3, 4.235_624_181_474_284_5e-2, 0.225_397_047_016_660_4, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-0.480_251_051_272_519_6, 0.0, 0.0, 0.0, 0.0, -6.359_610_162_555_930_5, -0.276_231_389_804_084_1, -6.500_796_633_979_847, 0.573_476_587_704_095_7, 1.347_125_994_868_138_9, 5.936_840_409_706_221, 6.590_346_245_333_925, 0.0, 0.0, 0.0, 0.0],
    [0.330_753_306_767_140_1, 0.0, 0.0, 0.0, 0.0, 5.956_207_776_829_962, -0.486_831_640_048_152_77, 4.462_055_288_206_771, 0.741_025_823_144_207_2, -0.711_819_203_457_591_3, -5.454_619_594_516_665, -4.140_803_729_244_71, 0.203_831_972_319_038_66, 0.0, 0.0, 0.0],
    [-0.584_711_112_299_894_5, 0.0, 0.0, 0.0, 0.0, -12.412_684_171_162_67, 1.360_245_445_660_928, -22.426_105_311_118_683, -0.882_885_705_586_545_8, 1.770_155_128_538_230_4, 12.158_096_519_185_339, 22.230_375_204_077_607, -0.663_448_376_020_124_9, 0.450_962_378_725_813_74, 0.0, 0.0],
    [1.940_575_549_810_648_7, 0.0, 0.0, 0.0, 0.0, 21.977_984_081_145_564, 0.823_074_732_698_472_9, 68.164_416_836_263_54, -3.117_097_463_620_267, -4.568_841_021_822_44, -18.741_909_871_262_65, -66.577_118_396_378_32, 1.098_915_553_165_441_8, 0.0, 0.0, 0.0],
];

#[rustfmt::skip]
pub const B_HIGH: [f64; STAGES] = [
    1.500_669_014_979_724_7e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    -1.055_180_992_746_381_3, 0.238_494_726_378_218_3, 0.128_815_177_428_299_15,
    0.227_662_311_104_621_57, 1.229_532_587_437_517_4, 4.624_976_662_810_384e-2,
    0.138_619_631_936_629_38, 3.080_010_168_319_435_5e-2, 0.0,
];

#[rustfmt::skip]
pub const B_LOW: [f64; STAGES] = [
    1.897_210_532_481_101_4e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    3.408_110_314_549_493_8, 0.126_032_388_382_092_1, 0.118_837_506_345_114_97,
    0.249_104_199_783_868_75, -3.269_966_219_928_978_3, 0.302_379_810_022_888_3,
    0.0, 0.0, 4.652_989_552_070_924e-2,
];

#[rustfmt::skip]
pub const C: [f64; STAGES] = [
    0.0, 0.3571e-1, 9.906_028_091_267_415e-2, 0.148_590_421_369_011_2, 0.6134,
    0.232_735_947_360_562_7, 0.553_864_052_639_437_3, 0.6555, 0.491625,
    0.6858e-1, 0.253, 0.662_064_179_541_204_6, 0.8309, 0.8998, 1.0, 1.0,
];

/// Right-hand side of a first-order system `y' = f(t, y)`.
pub trait Rhs {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

/// Accepted mesh of an adaptive integration, ordered in integration
/// direction.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    /// Largest accepted local error estimate, relative to the tolerance.
    pub max_err: f64,
    /// True when a guard stopped the integration before `t_end`.
    pub stopped_early: bool,
}

struct Stepper<'a, R: Rhs> {
    rhs: &'a R,
    k: Vec<Vec<f64>>,
    y_stage: Vec<f64>,
}

impl<'a, R: Rhs> Stepper<'a, R> {
    fn new(rhs: &'a R) -> Self {
        let dim = rhs.dim();
        Stepper {
            rhs,
            k: vec![vec![0.0; dim]; STAGES],
            y_stage: vec![0.0; dim],
        }
    }

    /// One trial step; returns (y_next, error_norm) with the usual mixed
    /// absolute/relative scaling.
    fn step(&mut self, t: f64, y: &[f64], h: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
        let dim = y.len();
        for s in 0..STAGES {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in self.k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += h * a * kj[i];
                    }
                }
                self.y_stage[i] = acc;
            }
            let (k_pre, k_cur) = self.k.split_at_mut(s);
            let _ = k_pre;
            self.rhs.eval(t + C[s] * h, &self.y_stage, &mut k_cur[0])?;
        }
        let mut y_next = vec![0.0; dim];
        let mut err_norm = 0.0f64;
        for i in 0..dim {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..STAGES {
                hi += B_HIGH[s] * self.k[s][i];
                lo += B_LOW[s] * self.k[s][i];
            }
            y_next[i] = y[i] + h * hi;
            let sc = tol + tol * y[i].abs().max(y_next[i].abs());
            let e = h * (hi - lo) / sc;
            err_norm += e * e;
        }
        err_norm = (err_norm / dim as f64).sqrt();
        if !err_norm.is_finite() || y_next.iter().any(|v| !v.is_finite()) {
            err_norm = f64::INFINITY;
        }
        Ok((y_next, err_norm))
    }
}

/// Integrate from `t0` to `t_end` (either direction) with error control at
/// `tol` (absolute and relative), step size capped at `h_max`. The `guard`
/// is checked on every accepted point; the first violation truncates the
/// trajectory (points satisfying the guard are kept, and a bisection-style
/// refinement walks up to the boundary).
pub fn integrate<R: Rhs>(
    rhs: &R,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    tol: f64,
    h_max: f64,
    guard: &dyn Fn(f64, &[f64]) -> bool,
) -> Result<Trajectory> {
    assert!(t_end != t0);
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let mut stepper = Stepper::new(rhs);

    if !guard(t0, y0) {
        return Err(Error::new(
            ErrorCode::SubintervalCollapse,
            "guard condition fails at the initial point",
        ));
    }

    let mut ts = vec![t0];
    let mut ys = vec![y0.to_vec()];
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = (span / 100.0).min(h_max) * dir;
    let mut max_err = 0.0f64;
    let mut stopped_early = false;
    let h_min = span * 1e-14;
    let mut steps = 0usize;
    let mut halvings = 0usize;

    while (t - t_end) * dir < 0.0 {
        steps += 1;
        if steps > 200_000 {
            return Err(Error::new(
                ErrorCode::StepSizeUnderflow,
                "step budget exhausted",
            ));
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        let (y_next, err) = stepper.step(t, &y, h, tol)?;
        if err <= 1.0 {
            let t_next = t + h;
            if !guard(t_next, &y_next) {
                // Approach the guard boundary by halving the step.
                if h.abs() <= h_min || halvings > 80 {
                    stopped_early = true;
                    break;
                }
                halvings += 1;
                h *= 0.5;
                continue;
            }
            max_err = max_err.max(err);
            t = t_next;
            y = y_next;
            ts.push(t);
            ys.push(y.clone());
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-ERR_EXP)).clamp(0.2, 5.0)
            };
            h = (h * factor).abs().min(h_max).copysign(dir);
        } else {
            let factor = (0.9 * err.powf(-ERR_EXP)).clamp(0.1, 0.9);
            h *= factor;
            if h.abs() < h_min {
                return Err(Error::new(
                    ErrorCode::StepSizeUnderflow,
                    format!("step size underflow near t = {t}"),
                ));
            }
        }
    }
    Ok(Trajectory {
        ts,
        ys,
        max_err,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Harmonic;
    impl Rhs for Harmonic {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        }
    }

    #[test]
    fn harmonic_oscillator_high_accuracy() {
        let traj = integrate(
            &Harmonic,
            0.0,
            &[0.0, 1.0],
            std::f64::consts::PI,
            1e-12,
            0.2,
            &|_, _| true,
        )
        .unwrap();
        let (tn, yn) = (traj.ts.last().unwrap(), traj.ys.last().unwrap());
        assert!((tn - std::f64::consts::PI).abs() < 1e-14);
        assert!((yn[0] - 0.0).abs() < 1e-11, "sin(pi) error {}", yn[0]);
        assert!((yn[1] + 1.0).abs() < 1e-11, "cos(pi) error {}", yn[1]);
    }

    #[test]
    fn ninth_order_convergence_on_polynomial() {
        // y' = 9 t^8 integrates exactly for a method of order >= 9
        struct P;
        impl Rhs for P {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, t: f64, _y: &[f64], dy: &mut [f64]) -> Result<()> {
                dy[0] = 9.0 * t.powi(8);
                Ok(())
            }
        }
        let traj = integrate(&P, 0.0, &[0.0], 1.0, 1e-6, 0.5, &|_, _| true).unwrap();
        let yn = traj.ys.last().unwrap()[0];
        assert!((yn - 1.0).abs() < 1e-12, "t^9 end value error {}", yn - 1.0);
    }

    #[test]
    fn guard_truncates_trajectory() {
        struct Blow;
        impl Rhs for Blow {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
                dy[0] = y[0] * y[0];
                Ok(())
            }
        }
        // y = 1/(1-t) blows up at t = 1; stop when y > 10 (t ~ 0.9)
        let traj = integrate(&Blow, 0.0, &[1.0], 2.0, 1e-10, 0.1, &|_, y| y[0] < 10.0).unwrap();
        assert!(traj.stopped_early);
        let t_last = *traj.ts.last().unwrap();
        assert!(t_last > 0.85 && t_last < 0.91, "stopped at {t_last}");
        let y_last = traj.ys.last().unwrap()[0];
        assert!(y_last <= 10.0);
        assert!((y_last - 1.0 / (1.0 - t_last)).abs() < 1e-7);
    }

    #[test]
    fn integrates_backwards() {
        let traj = integrate(
            &Harmonic,
            0.0,
            &[0.0, 1.0],
            -std::f64::consts::FRAC_PI_2,
            1e-12,
            0.2,
            &|_, _| true,
        )
        .unwrap();
        let yn = traj.ys.last().unwrap();
        assert!((yn[0] + 1.0).abs() < 1e-11);
        assert!(yn[1].abs() < 1e-11);
    }
}
