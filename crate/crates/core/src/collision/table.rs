//! Precomputed collision geometry on the uniform lattice.
//!
//! For a pre-collision pair `(v_a, v_b)` with lattice displacement `z = a − b`
//! and a σ node, the post-collision velocities are `v' = v_a + d`,
//! `v'* = v_b − d` with `d = (|z|σ − z)/2`. Because the lattice is uniform the
//! projection of `(v', v'*)` onto lattice nodes depends only on `(z, σ)`:
//!
//! * `λ = a + o`, `μ = b − o` with `o` the nearest-node offset of `d`;
//! * a second pair `λ + s`, `μ − s` on the other side of the energy shell;
//! * a weight `r` with `(1 − r) E(λ, μ) + r E(λ+s, μ−s) = E(a, b)`.
//!
//! Both pairs carry the exact pair momentum, so depositing with weights
//! `(1 − r, r)` conserves mass, momentum and energy exactly.

use super::kernel::{frame, KernelConfig, SigmaQuadrature};
use crate::num::Real;
use crate::velocity::VelocityGrid;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Event<T: Real> {
    pub z: [i16; 3],
    pub o: [i16; 3],
    pub s: [i16; 3],
    /// Smallest / largest node offset relative to `a` among `{a, b, λ, λ+s, μ, μ−s}`, per axis.
    pub min_rel: [i16; 3],
    pub max_rel: [i16; 3],
    pub r: T,
    /// `h^3 · w_σ b(cos θ) · |v_a − v_b|^γ`.
    pub weight: T,
}

impl<T: Real> Event<T> {
    /// Linear offsets (relative to `a`) of `b, λ, λ+s, μ, μ−s`.
    pub fn offsets(&self, n: usize) -> [isize; 5] {
        let lin = |d: [i16; 3]| -> isize {
            let n = n as isize;
            (d[0] as isize * n + d[1] as isize) * n + d[2] as isize
        };
        let z = self.z;
        let o = self.o;
        let s = self.s;
        let neg_z = [-z[0], -z[1], -z[2]];
        let os = [o[0] + s[0], o[1] + s[1], o[2] + s[2]];
        let mu = [-z[0] - o[0], -z[1] - o[1], -z[2] - o[2]];
        let mus = [mu[0] - s[0], mu[1] - s[1], mu[2] - s[2]];
        [lin(neg_z), lin(o), lin(os), lin(mu), lin(mus)]
    }

    /// Inclusive range of `a` along `axis` for which every node of the event is on the lattice.
    #[inline]
    pub fn a_range(&self, axis: usize, n: usize) -> (i64, i64) {
        (
            -(self.min_rel[axis] as i64),
            n as i64 - 1 - self.max_rel[axis] as i64,
        )
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EventTable<T: Real> {
    pub events: Vec<Event<T>>,
    /// Number of events whose second pair could not bracket the energy shell.
    pub dropped: usize,
}

impl<T: Real> EventTable<T> {
    pub fn build(grid: &VelocityGrid<T>, kernel: &KernelConfig<T>, sigma: &SigmaQuadrature<T>) -> Self {
        let n = grid.points_per_axis() as i32;
        let h = grid.spacing().as_f64();
        let w = grid.weight().as_f64();
        let mut events = Vec::new();
        let mut dropped = 0usize;
        let neighbours: Vec<[i32; 3]> = (0..27)
            .map(|k| [k / 9 - 1, (k / 3) % 3 - 1, k % 3 - 1])
            .filter(|s| *s != [0, 0, 0])
            .collect();
        for z0 in -(n - 1)..n {
            for z1 in -(n - 1)..n {
                for z2 in -(n - 1)..n {
                    let z = [z0, z1, z2];
                    if !canonical(z) {
                        continue;
                    }
                    let zf = [z0 as f64 * h, z1 as f64 * h, z2 as f64 * h];
                    let r = (zf[0] * zf[0] + zf[1] * zf[1] + zf[2] * zf[2]).sqrt();
                    let k = zf.map(|x| x / r);
                    let (e1, e2) = frame(k);
                    let kin = kernel.kinetic(T::lit(r)).as_f64();
                    for node in sigma.nodes() {
                        let (ct, st) = (node.cos_theta.as_f64(), node.sin_theta.as_f64());
                        let (cp, sp) = (node.cos_phi.as_f64(), node.sin_phi.as_f64());
                        let sig: [f64; 3] =
                            std::array::from_fn(|d| ct * k[d] + st * (cp * e1[d] + sp * e2[d]));
                        let d: [f64; 3] = std::array::from_fn(|c| 0.5 * (r * sig[c] - zf[c]));
                        let o: [i32; 3] = std::array::from_fn(|c| (d[c] / h).round() as i32);
                        // energy offset in units of 2h²
                        let shell = |p: [i32; 3]| -> i64 {
                            (0..3).map(|c| (p[c] * z[c] + p[c] * p[c]) as i64).sum()
                        };
                        let e0 = shell(o);
                        let (s, rr) = if e0 == 0 {
                            ([0, 0, 0], 0.0)
                        } else {
                            let mut best: Option<([i32; 3], f64, i64)> = None;
                            for s in &neighbours {
                                let p = [o[0] + s[0], o[1] + s[1], o[2] + s[2]];
                                let e1 = shell(p);
                                if e1 != 0 && e1.signum() == e0.signum() {
                                    continue;
                                }
                                let dist: f64 = (0..3).map(|c| (p[c] as f64 * h - d[c]).powi(2)).sum();
                                if best.map_or(true, |b| dist < b.1) {
                                    best = Some((*s, dist, e1));
                                }
                            }
                            match best {
                                Some((s, _, e1)) => (s, e0 as f64 / (e0 - e1) as f64),
                                None => {
                                    dropped += 1;
                                    continue;
                                }
                            }
                        };
                        let weight = w * node.weight.as_f64() * kin;
                        events.push(make_event(z, o, s, rr, weight));
                        let neg = |a: [i32; 3]| [-a[0], -a[1], -a[2]];
                        events.push(make_event(neg(z), neg(o), neg(s), rr, weight));
                    }
                }
            }
        }
        Self {
            events,
            dropped,
        }
    }
}

/// Lexicographically positive displacement.
fn canonical(z: [i32; 3]) -> bool {
    z[0] > 0 || (z[0] == 0 && (z[1] > 0 || (z[1] == 0 && z[2] > 0)))
}

fn make_event<T: Real>(z: [i32; 3], o: [i32; 3], s: [i32; 3], r: f64, weight: f64) -> Event<T> {
    let rel: [[i32; 3]; 6] = [
        [0, 0, 0],
        [-z[0], -z[1], -z[2]],
        o,
        [o[0] + s[0], o[1] + s[1], o[2] + s[2]],
        [-z[0] - o[0], -z[1] - o[1], -z[2] - o[2]],
        [-z[0] - o[0] - s[0], -z[1] - o[1] - s[1], -z[2] - o[2] - s[2]],
    ];
    let min_rel = std::array::from_fn(|c| rel.iter().map(|p| p[c]).min().unwrap() as i16);
    let max_rel = std::array::from_fn(|c| rel.iter().map(|p| p[c]).max().unwrap() as i16);
    Event {
        z: z.map(|x| x as i16),
        o: o.map(|x| x as i16),
        s: s.map(|x| x as i16),
        min_rel,
        max_rel,
        r: T::lit(r),
        weight: T::lit(weight),
    }
}
