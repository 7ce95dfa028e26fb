use std::sync::OnceLock;

use num_complex::Complex64;

pub const MAX_BITS: u8 = 6;

/// Gray code of `v`.
fn gray(v: usize) -> usize {
    v ^ (v >> 1)
}

/// Levels `−(m−1) … (m−1)` step 2, indexed by Gray label.
fn gray_pam(m: usize) -> Vec<f64> {
    let mut levels = vec![0.0; m];
    for pos in 0..m {
        levels[gray(pos)] = 2.0 * pos as f64 - (m as f64 - 1.0);
    }
    levels
}

/// Rectangular constellation with `bits_i` bits on I (high label bits) and
/// `bits_q` on Q, each axis Gray-coded.
fn rectangular(bits_i: u32, bits_q: u32) -> Vec<Complex64> {
    let li = gray_pam(1 << bits_i);
    let lq = gray_pam(1 << bits_q);
    (0..1usize << (bits_i + bits_q))
        .map(|label| Complex64::new(li[label >> bits_q], lq[label & ((1 << bits_q) - 1)]))
        .collect()
}

/// 32-point cross: the 8×4 Gray rectangle with its outer columns folded onto
/// the rows above and below, giving the 6×6 grid without corners.
fn cross32() -> Vec<Complex64> {
    rectangular(3, 2)
        .into_iter()
        .map(|p| {
            if p.re.abs() > 6.0 {
                Complex64::new(p.re.signum() * (4.0 - p.im.abs()), p.im.signum() * 5.0)
            } else {
                p
            }
        })
        .collect()
}

fn normalized(points: Vec<Complex64>) -> Vec<Complex64> {
    let e = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
    let s = e.sqrt();
    points.into_iter().map(|p| p / s).collect()
}

/// Unit-energy constellation carrying `bits` (1..=6), indexed by bit label.
pub fn constellation(bits: u8) -> &'static [Complex64] {
    static TABLES: OnceLock<Vec<Vec<Complex64>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        vec![
            vec![],
            normalized(vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]),
            normalized(rectangular(1, 1)),
            normalized(rectangular(2, 1)),
            normalized(rectangular(2, 2)),
            normalized(cross32()),
            normalized(rectangular(3, 3)),
        ]
    });
    &tables[bits as usize]
}

/// Label of the nearest constellation point.
pub fn nearest_label(z: Complex64, bits: u8) -> usize {
    let pts = constellation(bits);
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in pts.iter().enumerate() {
        let d = (z - p).norm_sqr();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Label from `bits` bits, most significant first.
pub fn label_from_bits(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

pub fn bits_from_label(label: usize, bits: u8, out: &mut Vec<u8>) {
    for j in (0..bits).rev() {
        out.push(((label >> j) & 1) as u8);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_unit_energy() {
        for b in 1..=MAX_BITS {
            let c = constellation(b);
            assert_eq!(c.len(), 1 << b);
            let e = c.iter().map(|p| p.norm_sqr()).sum::<f64>() / c.len() as f64;
            assert!((e - 1.0).abs() < 1e-12);
            for i in 0..c.len() {
                for j in 0..i {
                    assert!((c[i] - c[j]).norm() > 1e-6, "b={b} duplicate points");
                }
                assert_eq!(nearest_label(c[i], b), i);
            }
        }
    }

    #[test]
    fn cross_has_no_corners() {
        let raw = cross32();
        assert!(raw.iter().all(|p| !(p.re.abs() == 5.0 && p.im.abs() == 5.0)));
        assert!(raw.iter().all(|p| p.re.abs() <= 5.0 && p.im.abs() <= 5.0));
    }

    #[test]
    fn square_qam_neighbors_differ_by_one_bit() {
        let c = rectangular(2, 2);
        for i in 0..16 {
            for j in 0..16 {
                if ((c[i] - c[j]).norm() - 2.0).abs() < 1e-9 {
                    assert_eq!((i ^ j).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn label_bit_round_trip() {
        let mut v = Vec::new();
        bits_from_label(0b101101, 6, &mut v);
        assert_eq!(v, vec![1, 0, 1, 1, 0, 1]);
        assert_eq!(label_from_bits(&v), 0b101101);
    }
}
