//! Closed-form transition probabilities of the aggregate chain.

use paoii_core::chain::SystemState;
use paoii_core::SystemParams;

use super::bin_pmf;

/// Closed-form transition probabilities grouped by `(d_a, d_c, d_m)`,
/// written out case by case from the event probabilities.
pub struct Piecewise<'a> {
    pub p: &'a SystemParams,
    pub s: SystemState,
    pub n: usize,
}

#[derive(Clone, Copy)]
enum Case {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    I,
    J,
}

impl Piecewise<'_> {
    fn idle(&self) -> isize {
        (self.n - self.s.a - self.s.c - self.s.m) as isize
    }

    fn zeta(&self, i: isize, j: isize) -> Option<f64> {
        if i < 0 || j < 0 || i > self.idle() || j > self.s.m as isize {
            return None;
        }
        let l = self.p.lambda;
        Some(bin_pmf(self.idle() as usize, l, i as usize) * bin_pmf(self.s.m, l, j as usize))
    }

    fn case(&self, kind: Case, i: isize, j: isize) -> f64 {
        let Some(z) = self.zeta(i, j) else { return 0.0 };
        let p = self.p;
        let (i, j) = (i as usize, j as usize);
        let act = self.s.a + i;
        let b = self.s.c + self.s.m;
        let sigma_a = || (1.0 - p.eps) * p.alpha * (1.0 - p.alpha).powi(act as i32 - 1) * (1.0 - p.beta).powi(b as i32);
        let sigma_b = || (1.0 - p.eps) * (1.0 - p.alpha).powi(act as i32) * p.beta * (1.0 - p.beta).powi(b as i32 - 1);
        let times = |count: usize, f: &dyn Fn() -> f64| if count == 0 { 0.0 } else { count as f64 * f() };
        let (c_j, m_j) = (self.s.c + j, self.s.m - j);
        z * match kind {
            Case::A => (1.0 - p.psi) * times(act, &sigma_a),
            Case::B => p.psi * times(act, &sigma_a),
            Case::C => (1.0 - p.psi) * times(c_j, &sigma_b),
            Case::D => p.psi * times(c_j, &sigma_b),
            Case::E => (1.0 - p.psi) * times(m_j, &sigma_b),
            Case::F => p.psi * times(m_j, &sigma_b),
            Case::G => (1.0 - p.alpha).powi(act as i32) * (1.0 - p.beta).powi(b as i32),
            Case::I => p.eps * bin_pmf(act, p.alpha, 1) * bin_pmf(b, p.beta, 0),
            Case::J => p.eps * bin_pmf(act, p.alpha, 0) * bin_pmf(b, p.beta, 1),
        }
    }

    fn collision(&self, i: isize, j: isize, k: isize) -> f64 {
        let Some(z) = self.zeta(i, j) else { return 0.0 };
        let act = self.s.a as isize + i;
        if k < 0 || k > act {
            return 0.0;
        }
        let b = self.s.c + self.s.m;
        let lo = (2 - k).max(0) as usize;
        let tail: f64 = (lo..=b).map(|l| bin_pmf(b, self.p.beta, l)).sum();
        bin_pmf(act as usize, self.p.alpha, k as usize) * tail * z
    }

    pub fn entry(&self, to: SystemState) -> f64 {
        let da = to.a as isize - self.s.a as isize;
        let dc = to.c as isize - self.s.c as isize;
        let dm = to.m as isize - self.s.m as isize;
        use Case::*;
        match dc + dm {
            -1 => self.case(C, da, dc + 1) + self.case(E, da, dc),
            0 => {
                self.case(A, da + 1, dc)
                    + self.case(F, da, dc)
                    + self.case(G, da, dc)
                    + self.case(J, da, dc)
                    + self.collision(da, dc, 0)
                    + self.case(D, da, dc + 1)
            }
            1 => self.case(B, da + 1, dc) + self.case(I, da + 1, dc - 1) + self.collision(da + 1, dc - 1, 1),
            x if x > 1 => self.collision(da + dc + dm, -dm, dc + dm),
            _ => 0.0,
        }
    }
}
