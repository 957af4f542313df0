//! Counter-based normal variates (Philox4x32-10).
//!
//! A draw is a pure function of `(seed, stream, outer path, inner path, step)`,
//! so any path can be regenerated in isolation and results never depend on how
//! paths are divided between workers.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Identifies one simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PathKey {
    pub seed: u64,
    /// Independent branch (e.g. one per expiry or per instrument family).
    pub stream: u32,
    pub outer: u32,
    /// `0` for outer paths, `j + 1` for the `j`-th inner path of `outer`.
    pub inner: u32,
}

impl PathKey {
    pub fn outer(seed: u64, stream: u32, outer: u32) -> Self {
        PathKey {
            seed,
            stream,
            outer,
            inner: 0,
        }
    }

    pub fn inner(seed: u64, stream: u32, outer: u32, inner: u32) -> Self {
        PathKey {
            seed,
            stream,
            outer,
            inner: inner + 1,
        }
    }

    #[inline]
    fn block(&self, index: u32) -> [u32; 4] {
        philox4x32_10(
            [index, self.outer, self.inner, self.stream],
            [self.seed as u32, (self.seed >> 32) as u32],
        )
    }

    /// Standard normals for steps `0..out.len()`; step `k` depends on `k` only.
    pub fn fill_normals(&self, out: &mut [f64]) {
        self.fill_from(0, out);
    }

    /// A second, independent normal sequence for the same path.
    pub fn fill_aux_normals(&self, out: &mut [f64]) {
        self.fill_from(AUX_FLAG, out);
    }

    fn fill_from(&self, flag: u32, out: &mut [f64]) {
        for (b, chunk) in out.chunks_mut(2).enumerate() {
            let (z0, z1) = box_muller(self.block(flag | b as u32));
            chunk[0] = z0;
            if chunk.len() > 1 {
                chunk[1] = z1;
            }
        }
    }
}

const AUX_FLAG: u32 = 1 << 31;

/// Two 53-bit uniforms from one block, mapped to a pair of standard normals.
#[inline]
fn box_muller(w: [u32; 4]) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let a = ((w[0] as u64) << 21) ^ (w[1] as u64);
    let b = ((w[2] as u64) << 21) ^ (w[3] as u64);
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((a & ((1u64 << 53) - 1)) as f64 + 1.0) * SCALE;
    let u2 = (b & ((1u64 << 53) - 1)) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors of the reference Philox4x32-10 implementation.
    #[test]
    fn known_answers() {
        assert_eq!(
            philox4x32_10([0, 0, 0, 0], [0, 0]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32_10(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn prefix_stability() {
        let key = PathKey::outer(42, 3, 17);
        let mut long = vec![0.0; 101];
        let mut short = vec![0.0; 7];
        key.fill_normals(&mut long);
        key.fill_normals(&mut short);
        assert_eq!(&long[..7], &short[..]);
    }

    #[test]
    fn streams_differ() {
        let mut a = vec![0.0; 4];
        let mut b = vec![0.0; 4];
        PathKey::outer(1, 0, 0).fill_normals(&mut a);
        PathKey::inner(1, 0, 0, 0).fill_normals(&mut b);
        assert_ne!(a, b);
        PathKey::outer(1, 0, 0).fill_aux_normals(&mut b);
        assert_ne!(a, b);
    }

    #[test]
    fn moments_are_standard() {
        let mut xs = vec![0.0; 200_000];
        PathKey::outer(7, 0, 0).fill_normals(&mut xs);
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        let k = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n;
        assert!(m.abs() < 0.01);
        assert!((v - 1.0).abs() < 0.01);
        assert!((k - 3.0).abs() < 0.05);
    }
}
