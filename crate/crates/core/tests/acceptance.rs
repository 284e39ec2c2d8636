//! Acceptance suite. Each test is one criterion, timed against its budget.
//! Tests hold a shared lock so timings are not distorted by each other.
//!
//! The oracles below are deliberately naive: row-major dense matrices built
//! entry by entry from the defining formulas, independent of the library's
//! sparse and matrix-free code paths.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use magwalk::coin::{algebraic_sum, hadamard_partition_coin_system, random_coin_system};
use magwalk::linalg::{OperatorMatrix, StateVector, C64};
use magwalk::magnetic::{magnetic_basis_vector, magnetic_basis_vector_explicit};
use magwalk::spectra::{approximate_eigen_witnesses, coin_union_spectrum, walk_point_spectrum, SPECTRUM_TOL};
use magwalk::walk::{evolve, intertwining_check, position_distribution, step, WalkState};
use magwalk::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|p| p.into_inner())
}

fn finish(id: u32, name: &str, started: Instant, budget: Duration, failures: Vec<String>) {
    let elapsed = started.elapsed();
    let mut failures = failures;
    if elapsed >= budget {
        failures.push(format!("took {elapsed:?}, budget {budget:?}"));
    }
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{verdict}] {name} ({:.2}s / {}s)", elapsed.as_secs_f64(), budget.as_secs());
    assert!(failures.is_empty(), "criterion {id} {name}:\n{}", failures.join("\n"));
}

fn check(failures: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        failures.push(msg());
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Row-major dense square matrix.
#[derive(Clone)]
struct Dense {
    n: usize,
    a: Vec<C64>,
}

impl Dense {
    fn zeros(n: usize) -> Self {
        Dense { n, a: vec![C64::new(0.0, 0.0); n * n] }
    }
    fn identity(n: usize) -> Self {
        let mut m = Dense::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = c(1.0, 0.0);
        }
        m
    }
    fn at(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.n + j]
    }
    fn set(&mut self, i: usize, j: usize, v: C64) {
        self.a[i * self.n + j] = v;
    }
    fn mul(&self, o: &Dense) -> Dense {
        let n = self.n;
        let mut r = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.at(i, k);
                if x.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    r.a[i * n + j] += x * o.a[k * n + j];
                }
            }
        }
        r
    }
    fn adj(&self) -> Dense {
        let mut r = Dense::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                r.set(j, i, self.at(i, j).conj());
            }
        }
        r
    }
    fn lin(&self, s: C64, o: &Dense, t: C64) -> Dense {
        Dense { n: self.n, a: self.a.iter().zip(&o.a).map(|(x, y)| s * x + t * y).collect() }
    }
    fn max_diff(&self, o: &Dense) -> f64 {
        self.a.iter().zip(&o.a).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }
    fn max_abs(&self) -> f64 {
        self.a.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.at(i, j) * v[j]).sum()).collect()
    }
    fn kron(&self, o: &Dense) -> Dense {
        let n = self.n * o.n;
        let mut r = Dense::zeros(n);
        for i in 0..self.n {
            for j in 0..self.n {
                let x = self.at(i, j);
                for k in 0..o.n {
                    for l in 0..o.n {
                        r.set(i * o.n + k, j * o.n + l, x * o.at(k, l));
                    }
                }
            }
        }
        r
    }
    fn from_op(m: &OperatorMatrix) -> Dense {
        let mut r = Dense::zeros(m.rows());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                r.set(i, j, m.get(i, j));
            }
        }
        r
    }
    fn from_mat(m: &faer::Mat<C64>) -> Dense {
        let mut r = Dense::zeros(m.nrows());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                r.set(i, j, m[(i, j)]);
            }
        }
        r
    }
}

/// `∂_k`: `Z_σ ↦ Z_{σ∖k}` when `k ∈ σ`, else 0.
fn oracle_annihilator(n: usize, k: usize) -> Dense {
    let dim = 1 << (n + 1);
    let mut m = Dense::zeros(dim);
    for s in 0..dim {
        if s >> k & 1 == 1 {
            m.set(s & !(1 << k), s, c(1.0, 0.0));
        }
    }
    m
}

fn oracle_shift(n: usize, j: usize, nu: &[f64]) -> Dense {
    let a = oracle_annihilator(n, j);
    a.adj().lin(C64::from_polar(1.0, -nu[j]), &a, C64::from_polar(1.0, nu[j]))
}

fn sign(sigma: usize, j: usize) -> f64 {
    if sigma >> j & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Closed form `2^{−(n+1)/2}(−1)^{#(γ∖σ)} e^{−i∑_{j∈γ}ν_j}`.
fn oracle_magnetic_vector(n: usize, sigma: usize, nu: &[f64]) -> Vec<C64> {
    let dim = 1usize << (n + 1);
    let scale = (dim as f64).sqrt().recip();
    (0..dim)
        .map(|g| {
            let s = if (g & !sigma).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            let phase: f64 = (0..=n).filter(|&j| g >> j & 1 == 1).map(|j| nu[j]).sum();
            C64::from_polar(s * scale, -phase)
        })
        .collect()
}

fn oracle_signed_sum(cs: &CoinSystem, sigma: usize) -> Dense {
    let mut u = Dense::zeros(cs.d());
    for (j, cj) in cs.ops().iter().enumerate() {
        u = u.lin(c(1.0, 0.0), &Dense::from_mat(cj), c(sign(sigma, j), 0.0));
    }
    u
}

fn oracle_walk(cs: &CoinSystem, nu: &[f64]) -> Dense {
    let n = cs.n();
    let mut w = Dense::zeros((1 << (n + 1)) * cs.d());
    for (j, cj) in cs.ops().iter().enumerate() {
        w = w.lin(c(1.0, 0.0), &oracle_shift(n, j, nu).kron(&Dense::from_mat(cj)), c(1.0, 0.0));
    }
    w
}

fn random_phases(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..=n).map(|_| rng.random_range(-PI..=PI)).collect()
}

fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_d: usize) -> (CoinSystem, MagneticPotential) {
    let n = rng.random_range(0..=max_n);
    let d = rng.random_range(n + 1..=max_d.max(n + 1));
    let cs = random_coin_system(n, d, rng.random()).unwrap();
    let nu = MagneticPotential::new(random_phases(n, rng)).unwrap();
    (cs, nu)
}

fn unit(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

#[test]
fn criterion_01_car_relations() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();
    for n in 0..=8 {
        let report = verify_car(n).unwrap();
        check(&mut f, report.passes(1e-12), || format!("n={n}: library CAR residual {}", report.max_residual()));
        let dim = 1 << (n + 1);
        let id = Dense::identity(dim);
        let ops: Vec<Dense> = (0..=n).map(|k| oracle_annihilator(n, k)).collect();
        let adj: Vec<Dense> = ops.iter().map(Dense::adj).collect();
        for k in 0..=n {
            let lib_a = Dense::from_op(&annihilation_operator(n, k).unwrap());
            let lib_c = Dense::from_op(&creation_operator(n, k).unwrap());
            check(&mut f, lib_a.max_diff(&ops[k]) == 0.0, || format!("n={n} k={k}: annihilator differs from oracle"));
            check(&mut f, lib_c.max_diff(&adj[k]) == 0.0, || format!("n={n} k={k}: creator differs from oracle"));
        }
        // the full pairwise oracle check is O(n²·dim³); keep it to n ≤ 5
        if n <= 5 {
            let one = c(1.0, 0.0);
            let neg = c(-1.0, 0.0);
            let mut worst = 0.0f64;
            for j in 0..=n {
                worst = worst.max(ops[j].mul(&ops[j]).max_abs());
                worst = worst.max(adj[j].mul(&adj[j]).max_abs());
                worst = worst.max(adj[j].mul(&ops[j]).lin(one, &ops[j].mul(&adj[j]), one).max_diff(&id));
                for k in 0..=n {
                    worst = worst.max(ops[j].mul(&ops[k]).lin(one, &ops[k].mul(&ops[j]), neg).max_abs());
                    worst = worst.max(adj[j].mul(&adj[k]).lin(one, &adj[k].mul(&adj[j]), neg).max_abs());
                    if j != k {
                        worst = worst.max(adj[j].mul(&ops[k]).lin(one, &ops[k].mul(&adj[j]), neg).max_abs());
                    }
                }
            }
            check(&mut f, worst <= 1e-12, || format!("n={n}: oracle CAR residual {worst}"));
        }
    }
    finish(1, "CAR relations", t, Duration::from_secs(10), f);
}

#[test]
fn criterion_02_shift_involutions() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x02);
    for n in 0..=6 {
        let id = OperatorMatrix::identity(1 << (n + 1));
        for _ in 0..10 {
            let phases = random_phases(n, &mut rng);
            let nu = MagneticPotential::new(phases.clone()).unwrap();
            for j in 0..=n {
                let xi = magnetic_shift(n, j, &nu).unwrap();
                let sq = xi.matmul(&xi).max_diff(&id);
                let herm = xi.max_diff(&xi.adjoint());
                check(&mut f, sq <= 1e-12, || format!("n={n} j={j}: |Ξ²−I| = {sq}"));
                check(&mut f, herm <= 1e-12, || format!("n={n} j={j}: |Ξ−Ξ*| = {herm}"));
                if n <= 4 {
                    let diff = Dense::from_op(&xi).max_diff(&oracle_shift(n, j, &phases));
                    check(&mut f, diff <= 1e-15, || format!("n={n} j={j}: shift differs from oracle by {diff}"));
                }
            }
        }
    }
    finish(2, "shift involutions", t, Duration::from_secs(30), f);
}

#[test]
fn criterion_03_magnetic_eigenbasis() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x03);
    for n in 0..=5 {
        let dim = 1usize << (n + 1);
        for _ in 0..5 {
            let phases = random_phases(n, &mut rng);
            let nu = MagneticPotential::new(phases.clone()).unwrap();
            let vectors: Vec<StateVector> =
                (0..dim).map(|s| magnetic_basis_vector(SubsetIndex::new(s as u32), &nu).unwrap()).collect();
            let mut gram = 0.0f64;
            for a in 0..dim {
                for b in 0..dim {
                    let ip: C64 = vectors[a].iter().zip(vectors[b].iter()).map(|(x, y)| x.conj() * y).sum();
                    let target = if a == b { 1.0 } else { 0.0 };
                    gram = gram.max((ip - target).norm());
                }
            }
            check(&mut f, gram <= 1e-10, || format!("n={n}: Gram deviation {gram}"));
            let shifts: Vec<Dense> = (0..=n).map(|j| oracle_shift(n, j, &phases)).collect();
            let mut eig = 0.0f64;
            let mut agree = 0.0f64;
            for (s, z) in vectors.iter().enumerate() {
                for (j, xi) in shifts.iter().enumerate() {
                    let image = xi.apply(z);
                    let r = image.iter().zip(z.iter()).map(|(a, b)| (a - b * sign(s, j)).norm_sqr()).sum::<f64>().sqrt();
                    eig = eig.max(r);
                }
                let closed = magnetic_basis_vector_explicit(SubsetIndex::new(s as u32), &nu).unwrap();
                let oracle = oracle_magnetic_vector(n, s, &phases);
                agree = agree.max(z.max_abs_diff(&closed));
                agree = agree.max(z.iter().zip(&oracle).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
            }
            check(&mut f, eig <= 1e-10, || format!("n={n}: eigen-relation residual {eig}"));
            check(&mut f, agree <= 1e-12, || format!("n={n}: operator vs closed form differ by {agree}"));
        }
    }
    finish(3, "magnetic eigenbasis", t, Duration::from_secs(60), f);
}

#[test]
fn criterion_04_coin_and_walk_unitarity() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x04);
    for trial in 0..100 {
        let (cs, nu) = random_instance(&mut rng, 4, 8);
        let (n, d) = (cs.n(), cs.d());
        let report = cs.validate();
        check(&mut f, report.passed && report.max_residual() <= 1e-10, || {
            format!("trial {trial}: coin validation {report:?}")
        });
        let ops: Vec<Dense> = cs.ops().iter().map(Dense::from_mat).collect();
        let mut cross = 0.0f64;
        for j in 0..=n {
            for k in 0..=n {
                if j != k {
                    cross = cross.max(ops[j].adj().mul(&ops[k]).max_abs());
                    cross = cross.max(ops[j].mul(&ops[k].adj()).max_abs());
                }
            }
        }
        check(&mut f, cross <= 1e-10, || format!("trial {trial}: oracle cross products {cross}"));
        for s in 0..1usize << (n + 1) {
            let u = oracle_signed_sum(&cs, s);
            let lib = Dense::from_mat(&algebraic_sum(&cs, SubsetIndex::new(s as u32)).unwrap());
            check(&mut f, lib.max_diff(&u) <= 1e-15, || format!("trial {trial}: U_{s} differs from oracle"));
            let r = u.adj().mul(&u).max_diff(&Dense::identity(d));
            check(&mut f, r <= 1e-10, || format!("trial {trial}: U_{s} unitarity {r}"));
        }
        let w = evolution_operator(&nu, &cs).unwrap();
        let lib_w = w.unitarity_residual();
        check(&mut f, lib_w <= 1e-10, || format!("trial {trial}: W unitarity {lib_w}"));
        if w.dim() <= 128 {
            let dense = Dense::from_mat(&w.to_dense().unwrap());
            let oracle = oracle_walk(&cs, nu.phases());
            check(&mut f, dense.max_diff(&oracle) <= 1e-14, || format!("trial {trial}: W differs from oracle"));
            let r = dense.adj().mul(&dense).max_diff(&Dense::identity(w.dim()));
            check(&mut f, r <= 1e-10, || format!("trial {trial}: oracle W unitarity {r}"));
        }
    }
    finish(4, "coin systems and walk unitarity", t, Duration::from_secs(120), f);
}

#[test]
fn criterion_05_intertwining() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x05);
    for trial in 0..20 {
        let (cs, nu) = random_instance(&mut rng, 3, 6);
        let (n, d) = (cs.n(), cs.d());
        let op = evolution_operator(&nu, &cs).unwrap();
        let report = intertwining_check(&op).unwrap();
        check(&mut f, report.passes(1e-10), || format!("trial {trial}: library {report:?}"));

        let w = oracle_walk(&cs, nu.phases());
        let fock = 1usize << (n + 1);
        let zs: Vec<Vec<C64>> = (0..fock).map(|s| oracle_magnetic_vector(n, s, nu.phases())).collect();
        let mut resid = 0.0f64;
        let mut off_block = 0.0f64;
        for s in 0..fock {
            let u = oracle_signed_sum(&cs, s);
            let u = &u;
            for e in 0..d {
                let psi: Vec<C64> = zs[s].iter().flat_map(|&z| (0..d).map(move |k| if k == e { z } else { C64::new(0.0, 0.0) })).collect();
                let image = w.apply(&psi);
                let expected: Vec<C64> = zs[s].iter().flat_map(|&z| (0..d).map(move |k| z * u.at(k, e))).collect();
                let r = image.iter().zip(&expected).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                resid = resid.max(r);
                for (tau, zt) in zs.iter().enumerate() {
                    if tau == s {
                        continue;
                    }
                    for l in 0..d {
                        let amp: C64 = (0..fock).map(|g| zt[g].conj() * image[g * d + l]).sum();
                        off_block = off_block.max(amp.norm());
                    }
                }
            }
        }
        check(&mut f, resid <= 1e-10, || format!("trial {trial}: oracle intertwining residual {resid}"));
        check(&mut f, off_block <= 1e-10, || format!("trial {trial}: oracle off-block mass {off_block}"));
    }
    finish(5, "intertwining", t, Duration::from_secs(60), f);
}

/// Eigenvalues of a 2×2 matrix by the quadratic formula.
fn quadratic_eigenvalues(m: &Dense) -> [C64; 2] {
    let tr = m.at(0, 0) + m.at(1, 1);
    let det = m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
    let disc = (tr * tr - det * 4.0).sqrt();
    [(tr + disc) / 2.0, (tr - disc) / 2.0]
}

fn instances_for_spectra() -> Vec<(CoinSystem, MagneticPotential)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x06);
    (0..20).map(|_| random_instance(&mut rng, 3, 5)).collect()
}

#[test]
fn criterion_06_point_spectrum() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();
    for (i, (cs, nu)) in instances_for_spectra().iter().enumerate() {
        let r = verify_point_spectrum_theorem(nu, cs, SPECTRUM_TOL).unwrap();
        check(&mut f, r.passed, || format!("instance {i}: Hausdorff {}", r.hausdorff_distance));
        check(&mut f, r.multiset_equal, || format!("instance {i}: multiplicities differ"));
    }

    // n=1 Hadamard-partition coin: blocks ±S, and the rotations ±(S·P_0 − S·P_1)
    let cs = hadamard_partition_coin_system(1).unwrap();
    let nu = MagneticPotential::new(vec![0.3, 0.9]).unwrap();
    let mut oracle_raw = Vec::new();
    for s in 0..4 {
        oracle_raw.extend(quadratic_eigenvalues(&oracle_signed_sum(&cs, s)));
    }
    let oracle = SpectrumReport::from_raw("oracle", None, &oracle_raw, SPECTRUM_TOL);
    let frozen: [(f64, usize); 6] =
        [(-3.0 * FRAC_PI_4, 1), (-FRAC_PI_4, 1), (0.0, 2), (FRAC_PI_4, 1), (3.0 * FRAC_PI_4, 1), (PI, 2)];
    let walk = walk_point_spectrum(&nu, &cs).unwrap();
    let union = coin_union_spectrum(&cs).unwrap();
    for (label, spec) in [("oracle", &oracle), ("walk", &walk), ("union", &union.multiset)] {
        let matches = spec.eigenvalues.len() == frozen.len()
            && spec
                .eigenvalues
                .iter()
                .zip(frozen)
                .all(|(e, (theta, m))| (e.value - unit(theta)).norm() <= 1e-12 && e.multiplicity == m);
        check(&mut f, matches, || format!("Hadamard n=1 {label} spectrum {:?}", spec.eigenvalues));
    }
    finish(6, "point-spectrum union", t, Duration::from_secs(60), f);
}

#[test]
fn criterion_07_approximate_spectrum() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();
    let mut instances = instances_for_spectra();
    instances.push((hadamard_partition_coin_system(1).unwrap(), MagneticPotential::new(vec![0.3, 0.9]).unwrap()));
    for (i, (cs, nu)) in instances.iter().enumerate() {
        let r = verify_approximate_spectrum_theorem(nu, cs, SPECTRUM_TOL).unwrap();
        check(&mut f, r.passed, || {
            format!("instance {i}: Hausdorff {} witnesses {}", r.hausdorff_distance, r.max_witness_residual)
        });
        check(&mut f, r.max_witness_residual <= 1e-8, || format!("instance {i}: lifted witness {}", r.max_witness_residual));
        check(&mut f, r.agrees_with_point_check && r.passed == r.point.passed, || {
            format!("instance {i}: disagrees with point-spectrum check")
        });
        let w = OperatorMatrix::from(evolution_operator(nu, cs).unwrap().to_dense().unwrap());
        let worst = approximate_eigen_witnesses(&w).unwrap().iter().map(|p| p.1).fold(0.0, f64::max);
        check(&mut f, worst <= 1e-8, || format!("instance {i}: direct witness {worst}"));
    }
    finish(7, "approximate-spectrum union", t, Duration::from_secs(60), f);
}

#[test]
fn criterion_08_spectral_stability() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x08);
    let mut coins = vec![hadamard_partition_coin_system(1).unwrap(), grover_coin_system(3).unwrap()];
    for n in 1..=3 {
        coins.push(random_coin_system(n, n + 2, rng.random()).unwrap());
    }
    for (i, cs) in coins.iter().enumerate() {
        let r = verify_spectral_stability(cs, 5, rng.random(), SPECTRUM_TOL).unwrap();
        check(&mut f, r.passed, || {
            format!("coin {i}: spectra {} operators {}", r.max_spectrum_distance, r.max_operator_difference)
        });
        check(&mut f, r.potentials.len() == 6 && r.potentials[0].iter().all(|&p| p == 0.0), || {
            format!("coin {i}: expected null plus 5 samples")
        });
    }
    finish(8, "spectral stability", t, Duration::from_secs(60), f);
}

#[test]
fn criterion_09_null_potential_reduction() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x09);
    for trial in 0..20 {
        let (cs, _) = random_instance(&mut rng, 4, 6);
        let a = evolution_operator(&MagneticPotential::null(cs.n()), &cs).unwrap().to_operator();
        let b = null_potential_operator(&cs).unwrap().to_operator();
        let equal = (0..a.rows()).all(|i| (0..a.cols()).all(|j| a.get(i, j) == b.get(i, j)));
        check(&mut f, equal, || format!("trial {trial}: max difference {}", a.max_diff(&b)));
    }
    finish(9, "null-potential reduction", t, Duration::from_secs(60), f);
}

#[test]
fn criterion_10_dynamics() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x10);

    let cs = random_coin_system(3, 5, rng.random()).unwrap();
    let nu = MagneticPotential::new(random_phases(3, &mut rng)).unwrap();
    let op = evolution_operator(&nu, &cs).unwrap();
    let start = WalkState::uniform_coin_vertex(3, 5, SubsetIndex::new(0b0101)).unwrap();
    let end = evolve(&op, &start, 1000).unwrap();
    let drift = (end.norm() - 1.0).abs();
    check(&mut f, drift <= 1e-8, || format!("norm drift after 1000 steps {drift}"));
    check(&mut f, end.t == 1000, || format!("time index {}", end.t));

    for trial in 0..10 {
        let (cs, nu) = random_instance(&mut rng, 3, 5);
        let (n, d) = (cs.n(), cs.d());
        let op = evolution_operator(&nu, &cs).unwrap();
        let dense = oracle_walk(&cs, nu.phases());
        let fock = 1usize << (n + 1);
        let state: Vec<C64> = (0..fock * d).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let state = StateVector(state).normalized().unwrap();
        let free = op.apply(&state);
        let diff = free.iter().zip(dense.apply(&state)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        check(&mut f, diff <= 1e-12, || format!("trial {trial}: matrix-free vs dense {diff}"));

        let sigma = rng.random_range(0..fock);
        let vertex = WalkState::vertex(n, d, SubsetIndex::new(sigma as u32), rng.random_range(0..d)).unwrap();
        let next = step(&op, &vertex).unwrap();
        let probs = position_distribution(&next);
        for (tau, p) in probs.probabilities.iter().enumerate() {
            let neighbor = (tau ^ sigma).count_ones() == 1;
            check(&mut f, neighbor || *p == 0.0, || format!("trial {trial}: mass {p} at non-neighbor {tau} of {sigma}"));
        }
    }
    finish(10, "dynamics", t, Duration::from_secs(60), f);
}

#[test]
fn criterion_11_scale() {
    let _g = serial();
    let t = Instant::now();
    let mut f = Vec::new();

    let cs = random_coin_system(14, 15, 0x11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x11);
    let nu = MagneticPotential::new(random_phases(14, &mut rng)).unwrap();
    let op = evolution_operator(&nu, &cs).unwrap();
    check(&mut f, op.dim() == 491_520, || format!("state dimension {}", op.dim()));
    let mut state = WalkState::uniform_coin_vertex(14, 15, SubsetIndex::EMPTY).unwrap();
    let mut slowest = Duration::ZERO;
    for _ in 0..3 {
        let s = Instant::now();
        state = step(&op, &state).unwrap();
        slowest = slowest.max(s.elapsed());
    }
    println!("  matrix-free step at dim 491520: {:.3}s", slowest.as_secs_f64());
    check(&mut f, slowest < Duration::from_secs(1), || format!("step took {slowest:?}"));
    check(&mut f, (state.norm() - 1.0).abs() <= 1e-10, || format!("norm {}", state.norm()));

    let cs = random_coin_system(8, 9, 0x8).unwrap();
    let nu = MagneticPotential::new(random_phases(8, &mut rng)).unwrap();
    let s = Instant::now();
    let spec = walk_point_spectrum(&nu, &cs).unwrap();
    let dense_time = s.elapsed();
    println!("  dense spectrum at dim 4608: {:.1}s", dense_time.as_secs_f64());
    check(&mut f, dense_time < Duration::from_secs(120), || format!("dense spectrum took {dense_time:?}"));
    check(&mut f, spec.total_multiplicity() == 4608, || format!("multiplicity total {}", spec.total_multiplicity()));
    let union = coin_union_spectrum(&cs).unwrap();
    check(&mut f, spec.hausdorff_distance(&union.set) <= SPECTRUM_TOL, || {
        format!("dim 4608 union mismatch {}", spec.hausdorff_distance(&union.set))
    });
    finish(11, "scale", t, Duration::from_secs(180), f);
}
