//! Normal distribution helpers, the paired one-sided t-test, and Stouffer's
//! p-value combination.

use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, erf::erfc};

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::Domain(z, "normal_cdf"));
    }
    Ok(0.5 * erfc(-z / std::f64::consts::SQRT_2))
}

/// Inverse standard normal CDF (Wichura's AS241, PPND16).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(p, "normal_quantile"));
    }
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    fn poly(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return Ok(q * poly(&A, r) / poly(&B, r));
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let z = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    Ok(if q < 0.0 { -z } else { z })
}

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let x = df / (df + t * t);
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, x);
    if t > 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    AGreater,
    BGreater,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub n: usize,
    pub mean_difference: f64,
    /// `None` when the differences have zero spread.
    pub t: Option<f64>,
    pub df: usize,
    pub p_value: f64,
    pub degenerate: bool,
}

/// Paired one-sided t-test on `d = a − b`.
pub fn paired_t_test_one_sided(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "paired samples of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "paired t-test needs at least 2 pairs, got {n}"
        )));
    }
    let d: Vec<f64> = match alternative {
        Alternative::AGreater => a.iter().zip(b).map(|(x, y)| x - y).collect(),
        Alternative::BGreater => a.iter().zip(b).map(|(x, y)| y - x).collect(),
    };
    let mean = d.iter().sum::<f64>() / n as f64;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mean_difference = match alternative {
        Alternative::AGreater => mean,
        Alternative::BGreater => -mean,
    };
    if sd == 0.0 {
        let p_value = if mean == 0.0 {
            0.5
        } else if mean > 0.0 {
            0.0
        } else {
            1.0
        };
        return Ok(TTestResult {
            n,
            mean_difference,
            t: None,
            df: n - 1,
            p_value,
            degenerate: true,
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    Ok(TTestResult {
        n,
        mean_difference,
        t: Some(match alternative {
            Alternative::AGreater => t,
            Alternative::BGreater => -t,
        }),
        df: n - 1,
        p_value: student_t_sf(t, (n - 1) as f64),
        degenerate: false,
    })
}

/// Stouffer's method: `Z = Σ Φ⁻¹(1 − pᵢ) / √k`, combined `p = 1 − Φ(Z)`.
pub fn stouffer_combine(p_values: &[f64]) -> Result<f64> {
    if p_values.is_empty() {
        return Err(Error::InvalidArgument("no p-values to combine".into()));
    }
    let mut sum = 0.0;
    for &p in p_values {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::PValueOutOfRange(p));
        }
        sum -= normal_quantile(p)?;
    }
    normal_cdf(-sum / (p_values.len() as f64).sqrt())
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}
