/// Dot product with four independent accumulators and a fixed summation
/// order, so results are reproducible regardless of caller.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

const LOG2E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 6.931_471_803_691_238e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
/// 1.5·2^52: adding it rounds to the nearest integer and leaves that integer
/// in the low mantissa bits.
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0;

/// Below this exp returns exactly 0. Values under e^−345 ≈ 1e−150 would only
/// feed subnormal arithmetic further down, which is very slow on x86.
pub(crate) const EXP_FLUSH: f64 = -345.0;

/// exp(t) for t ≤ 0, branch-free so loops over it vectorise. Returns 0 below
/// [`EXP_FLUSH`]; above it the relative error is a few ulp.
#[inline(always)]
pub(crate) fn exp_nonpositive(t: f64) -> f64 {
    let keep = t >= EXP_FLUSH;
    let t = t.max(EXP_FLUSH);
    let y = t * LOG2E + ROUND_MAGIC;
    let k = y - ROUND_MAGIC;
    let ki = (y.to_bits() as i64).wrapping_sub(ROUND_MAGIC.to_bits() as i64);
    let r = t - k * LN2_HI - k * LN2_LO;
    // Taylor series to degree 12 on |r| ≤ ln2 / 2
    let mut p = 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    let v = p * f64::from_bits(((ki + 1023) << 52) as u64);
    if keep {
        v
    } else {
        0.0
    }
}

/// 2^(j/16) for j = 0..16.
static EXP2_SIXTEENTHS: [f64; 16] = [
    1.0,
    1.044_273_782_427_413_8,
    1.090_507_732_665_257_7,
    1.138_788_634_756_691_6,
    1.189_207_115_002_721,
    1.241_857_812_073_484,
    1.296_839_554_651_009_6,
    1.354_255_546_936_892_7,
    std::f64::consts::SQRT_2,
    1.476_826_145_939_499_3,
    1.542_210_825_407_940_7,
    1.610_490_331_949_254_3,
    1.681_792_830_507_429,
    1.756_252_160_373_299_5,
    1.834_008_086_409_342_4,
    1.915_206_561_397_147_4,
];

const SIXTEEN_LOG2E: f64 = 16.0 * LOG2E;
const LN2_HI_16: f64 = LN2_HI / 16.0;
const LN2_LO_16: f64 = LN2_LO / 16.0;
/// Biases the reduced exponent so it stays non-negative down to EXP_FLUSH.
const EXP_BIAS_16: i64 = 16 * 1023;

/// Taylor coefficients of exp from degree 5 down to 0; degree 6 is 1/720.
const EXP_TAYLOR: [f64; 6] = [1.0 / 120.0, 1.0 / 24.0, 1.0 / 6.0, 0.5, 1.0, 1.0];

/// exp(t) for t ≤ 0 through a 16-entry table of 2^(j/16), which leaves
/// |r| ≤ ln2/32 for the polynomial. Same flush rule as [`exp_nonpositive`],
/// relative error about 1e-15.
#[inline(always)]
fn exp_table(t: f64) -> f64 {
    exp_table_lanes([t])[0]
}

/// [`exp_table`] over a block of lanes, written so that each step is one
/// operation across all lanes.
#[inline(always)]
fn exp_table_lanes<const N: usize>(t: [f64; N]) -> [f64; N] {
    let mut r = [0.0f64; N];
    let mut bits = [0u64; N];
    for l in 0..N {
        let tl = t[l].max(EXP_FLUSH);
        let y = tl * SIXTEEN_LOG2E + ROUND_MAGIC;
        let k = y - ROUND_MAGIC;
        bits[l] = y
            .to_bits()
            .wrapping_sub(ROUND_MAGIC.to_bits())
            .wrapping_add(EXP_BIAS_16 as u64);
        r[l] = tl - k * LN2_HI_16 - k * LN2_LO_16;
    }
    let mut p = [1.0 / 720.0; N];
    for coef in EXP_TAYLOR {
        for l in 0..N {
            p[l] = p[l] * r[l] + coef;
        }
    }
    let mut out = [0.0f64; N];
    for l in 0..N {
        let scale = f64::from_bits((bits[l] >> 4) << 52);
        let v = p[l] * EXP2_SIXTEENTHS[(bits[l] & 15) as usize] * scale;
        out[l] = if t[l] >= EXP_FLUSH { v } else { 0.0 };
    }
    out
}

const LANES: usize = 16;

/// Terms c_j exp(a_j (z − m_j)²) with a_j < 0.
#[derive(Debug, Clone, Default)]
pub(crate) struct GaussTerms {
    m: Vec<f64>,
    a: Vec<f64>,
    c: Vec<f64>,
}

impl GaussTerms {
    pub(crate) fn new(m: Vec<f64>, a: Vec<f64>, c: Vec<f64>) -> Self {
        assert!(m.len() == a.len() && m.len() == c.len());
        Self { m, a, c }
    }
}

/// Σ_j c_j exp(a_j (z − m_j)²).
///
/// Picks AVX-512 or AVX2+FMA at run time. The vector paths fuse the
/// polynomial steps, so they differ from the portable path by rounding only;
/// on a given CPU the result is always the same.
#[inline]
pub(crate) fn gauss_sum(g: &GaussTerms, z: f64) -> f64 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the feature has just been detected.
            return unsafe { avx512::gauss_sum(g, [z]) }[0];
        }
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
        {
            // SAFETY: as above.
            return unsafe { avx2::gauss_sum(g, [z]) }[0];
        }
    }
    gauss_sum_portable(g, z)
}

/// [`gauss_sum`] at two abscissae in one pass over the terms.
#[inline]
pub(crate) fn gauss_sum_pair(g: &GaussTerms, z: [f64; 2]) -> [f64; 2] {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the feature has just been detected.
            return unsafe { avx512::gauss_sum(g, z) };
        }
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
        {
            // SAFETY: as above.
            return unsafe { avx2::gauss_sum(g, z) };
        }
    }
    z.map(|z| gauss_sum_portable(g, z))
}

/// Accumulates term `j` into lane `j mod 16`, then folds the lanes
/// pairwise and adds the scalar tail.
fn gauss_sum_portable(g: &GaussTerms, z: f64) -> f64 {
    let n = g.m.len();
    let mut acc = [0.0f64; LANES];
    let split = n - n % LANES;
    for ((mb, ab), cb) in g.m[..split]
        .chunks_exact(LANES)
        .zip(g.a[..split].chunks_exact(LANES))
        .zip(g.c[..split].chunks_exact(LANES))
    {
        let mut t = [0.0f64; LANES];
        for l in 0..LANES {
            let r = z - mb[l];
            t[l] = ab[l] * r * r;
        }
        let e = exp_table_lanes(t);
        for l in 0..LANES {
            acc[l] += cb[l] * e[l];
        }
    }
    let mut width = LANES;
    while width > 1 {
        width /= 2;
        for l in 0..width {
            acc[l] += acc[l + width];
        }
    }
    acc[0] + gauss_tail(g, split, z)
}

fn gauss_tail(g: &GaussTerms, from: usize, z: f64) -> f64 {
    let mut tail = 0.0;
    for i in from..g.m.len() {
        let r = z - g.m[i];
        tail += g.c[i] * exp_table(g.a[i] * r * r);
    }
    tail
}

#[cfg(target_arch = "x86_64")]
mod avx2 {
    use std::arch::x86_64::*;

    use super::{
        gauss_tail, GaussTerms, EXP2_SIXTEENTHS, EXP_BIAS_16, EXP_FLUSH, EXP_TAYLOR, LANES,
        LN2_HI_16, LN2_LO_16, ROUND_MAGIC, SIXTEEN_LOG2E,
    };

    /// Four-wide exp_table; the table lookup is a gather.
    #[inline]
    #[target_feature(enable = "avx2,fma")]
    fn exp4(t: __m256d) -> __m256d {
        let keep = _mm256_cmp_pd::<_CMP_GE_OQ>(t, _mm256_set1_pd(EXP_FLUSH));
        let t = _mm256_max_pd(t, _mm256_set1_pd(EXP_FLUSH));
        let magic = _mm256_set1_pd(ROUND_MAGIC);
        let y = _mm256_add_pd(_mm256_mul_pd(t, _mm256_set1_pd(SIXTEEN_LOG2E)), magic);
        let k = _mm256_sub_pd(y, magic);
        let bits = _mm256_sub_epi64(
            _mm256_castpd_si256(y),
            _mm256_set1_epi64x(ROUND_MAGIC.to_bits() as i64 - EXP_BIAS_16),
        );
        let r = _mm256_sub_pd(
            _mm256_sub_pd(t, _mm256_mul_pd(k, _mm256_set1_pd(LN2_HI_16))),
            _mm256_mul_pd(k, _mm256_set1_pd(LN2_LO_16)),
        );
        let mut p = _mm256_set1_pd(1.0 / 720.0);
        for coef in EXP_TAYLOR {
            p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(coef));
        }
        let idx = _mm256_and_si256(bits, _mm256_set1_epi64x(15));
        // SAFETY: every index is in 0..16.
        let tab = unsafe { _mm256_i64gather_pd::<8>(EXP2_SIXTEENTHS.as_ptr(), idx) };
        let scale = _mm256_slli_epi64::<52>(_mm256_srli_epi64::<4>(bits));
        let v = _mm256_mul_pd(_mm256_mul_pd(p, tab), _mm256_castsi256_pd(scale));
        _mm256_and_pd(v, keep)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) fn gauss_sum<const K: usize>(g: &GaussTerms, z: [f64; K]) -> [f64; K] {
        let (m, a, c) = (&g.m, &g.a, &g.c);
        let n = m.len();
        let split = n - n % LANES;
        let zv = z.map(|z| _mm256_set1_pd(z));
        let mut acc = [[_mm256_setzero_pd(); LANES / 4]; K];
        let mut i = 0;
        while i < split {
            for q in 0..LANES / 4 {
                let j = i + 4 * q;
                // SAFETY: j + 4 <= split <= n for all three slices.
                let (mv, av, cv) = unsafe {
                    (
                        _mm256_loadu_pd(m.as_ptr().add(j)),
                        _mm256_loadu_pd(a.as_ptr().add(j)),
                        _mm256_loadu_pd(c.as_ptr().add(j)),
                    )
                };
                for k in 0..K {
                    let r = _mm256_sub_pd(zv[k], mv);
                    let t = _mm256_mul_pd(_mm256_mul_pd(av, r), r);
                    acc[k][q] = _mm256_add_pd(acc[k][q], _mm256_mul_pd(cv, exp4(t)));
                }
            }
            i += LANES;
        }
        let mut out = [0.0; K];
        for k in 0..K {
            // fold lanes exactly as the portable path: 16 -> 8 -> 4 -> 2 -> 1
            let h8 = [
                _mm256_add_pd(acc[k][0], acc[k][2]),
                _mm256_add_pd(acc[k][1], acc[k][3]),
            ];
            let h4 = _mm256_add_pd(h8[0], h8[1]);
            let mut lanes = [0.0f64; 4];
            // SAFETY: lanes holds four f64.
            unsafe { _mm256_storeu_pd(lanes.as_mut_ptr(), h4) };
            let h2 = [lanes[0] + lanes[2], lanes[1] + lanes[3]];
            out[k] = (h2[0] + h2[1]) + gauss_tail(g, split, z[k]);
        }
        out
    }
}

#[cfg(target_arch = "x86_64")]
mod avx512 {
    use std::arch::x86_64::*;

    use super::{
        gauss_tail, GaussTerms, EXP2_SIXTEENTHS, EXP_FLUSH, EXP_TAYLOR, LANES, LN2_HI_16,
        LN2_LO_16, ROUND_MAGIC, SIXTEEN_LOG2E,
    };

    /// Eight-wide exp_table without the flush, which the caller applies
    /// through the returned mask. The table sits in two registers and scalef
    /// applies 2^⌊k/16⌋; the clamp keeps scalef away from underflow, which
    /// is very slow.
    #[inline]
    #[target_feature(enable = "avx512f")]
    fn exp8(t: __m512d, tab_lo: __m512d, tab_hi: __m512d) -> (__m512d, __mmask8) {
        let keep = _mm512_cmp_pd_mask::<_CMP_GE_OQ>(t, _mm512_set1_pd(EXP_FLUSH));
        let t = _mm512_max_pd(t, _mm512_set1_pd(EXP_FLUSH));
        let magic = _mm512_set1_pd(ROUND_MAGIC);
        let y = _mm512_fmadd_pd(t, _mm512_set1_pd(SIXTEEN_LOG2E), magic);
        let k = _mm512_sub_pd(y, magic);
        let r = _mm512_fnmadd_pd(k, _mm512_set1_pd(LN2_HI_16), t);
        let r = _mm512_fnmadd_pd(k, _mm512_set1_pd(LN2_LO_16), r);
        let mut p = _mm512_set1_pd(1.0 / 720.0);
        for coef in EXP_TAYLOR {
            p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(coef));
        }
        // the low four bits of y hold k mod 16, which is all permutex2var reads
        let tab = _mm512_permutex2var_pd(tab_lo, _mm512_castpd_si512(y), tab_hi);
        let e = _mm512_mul_pd(k, _mm512_set1_pd(1.0 / 16.0));
        (_mm512_scalef_pd(_mm512_mul_pd(p, tab), e), keep)
    }

    #[target_feature(enable = "avx512f")]
    pub(super) fn gauss_sum<const K: usize>(g: &GaussTerms, z: [f64; K]) -> [f64; K] {
        let (m, a, c) = (&g.m, &g.a, &g.c);
        let n = m.len();
        let split = n - n % LANES;
        let zv = z.map(|z| _mm512_set1_pd(z));
        // SAFETY: the table holds sixteen f64.
        let (tab_lo, tab_hi) = unsafe {
            (
                _mm512_loadu_pd(EXP2_SIXTEENTHS.as_ptr()),
                _mm512_loadu_pd(EXP2_SIXTEENTHS.as_ptr().add(8)),
            )
        };
        let mut acc = [[_mm512_setzero_pd(); LANES / 8]; K];
        let mut i = 0;
        while i < split {
            for q in 0..LANES / 8 {
                let j = i + 8 * q;
                // SAFETY: j + 8 <= split <= n for all three slices.
                let (mv, av, cv) = unsafe {
                    (
                        _mm512_loadu_pd(m.as_ptr().add(j)),
                        _mm512_loadu_pd(a.as_ptr().add(j)),
                        _mm512_loadu_pd(c.as_ptr().add(j)),
                    )
                };
                for k in 0..K {
                    let r = _mm512_sub_pd(zv[k], mv);
                    let t = _mm512_mul_pd(_mm512_mul_pd(av, r), r);
                    let (e, keep) = exp8(t, tab_lo, tab_hi);
                    acc[k][q] = _mm512_mask3_fmadd_pd(cv, e, acc[k][q], keep);
                }
            }
            i += LANES;
        }
        let mut out = [0.0; K];
        for k in 0..K {
            let h8 = _mm512_add_pd(acc[k][0], acc[k][1]);
            let mut lanes = [0.0f64; 8];
            // SAFETY: lanes holds eight f64.
            unsafe { _mm512_storeu_pd(lanes.as_mut_ptr(), h8) };
            let h4 = [0, 1, 2, 3].map(|l| lanes[l] + lanes[l + 4]);
            let h2 = [h4[0] + h4[2], h4[1] + h4[3]];
            out[k] = (h2[0] + h2[1]) + gauss_tail(g, split, z[k]);
        }
        out
    }
}
