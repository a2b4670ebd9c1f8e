//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::Path;
use std::time::{Duration, Instant};

use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qfuse::fusion::{adaptive_weights, fuse, qssim_score, FuseConfig, SsimParams};
use qfuse::patch::build_dictionary;
use qfuse::pipeline::eval::{
    copy_violations, evaluate_split, MIN_FUSED_PSNR, MIN_MAP_ACCURACY, MIN_PATCH_ACCURACY,
    MIN_PSNR_GAIN,
};
use qfuse::pipeline::{read_image, to_quaternion, RgbImage, Split};
use qfuse::qfed::{decompose, Block, QfedConfig, QfedSolver};
use qfuse::quat::{
    complex_adjoint, grad1, iqfft2, nuclear_prox, qfft2, qsvd, soft_threshold, transfer1,
    Quaternion, QuaternionMatrix, ShrinkMode,
};

// tolerances
const NORM_MUL_TOL: f64 = 1e-12;
const ADJOINT_TOL: f64 = 1e-12;
const QSVD_RECON_TOL: f64 = 1e-9;
const QSVD_SIGMA_TOL: f64 = 1e-9;
const PROX_EXACT_TOL: f64 = 1e-12;
const FIRM_SLACK: f64 = 1e-10;
const SHRINK_TOL: f64 = 1e-14;
const FFT_ROUND_TRIP_TOL: f64 = 1e-10;
const FFT_DIAG_TOL: f64 = 1e-8;
const PARSEVAL_TOL: f64 = 1e-10;
const QFED_TOL: f64 = 1e-5;
const QFED_MAX_ITER: usize = 50;
const RESIDUAL_TOL: f64 = 1e-3;
const OBJECTIVE_SLACK: f64 = 1e-10;
const QSSIM_TOL: f64 = 1e-6;
const TAU_HALF_TOL: f64 = 1e-6;

const SYNTH_SIGMA: f64 = 3.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rand_q(rng: &mut ChaCha8Rng) -> Quaternion {
    Quaternion::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

fn rand_qmat(rng: &mut ChaCha8Rng, m: usize, n: usize) -> QuaternionMatrix {
    QuaternionMatrix::from_fn(m, n, |_, _| rand_q(rng))
}

fn test_image() -> RgbImage {
    read_image(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/astronaut_256.png"))
        .expect("bundled test image")
}

fn crop(img: &RgbImage, r0: usize, c0: usize, size: usize) -> QuaternionMatrix {
    let q = to_quaternion(img);
    QuaternionMatrix::from_fn(size, size, |r, c| q.get(r0 + r, c0 + c))
}

/// `[[c1, c2], [-conj c2, conj c1]]` written out independently of the library.
fn adjoint_oracle(q: Quaternion) -> [[Complex64; 2]; 2] {
    let c1 = Complex64::new(q.a, q.b);
    let c2 = Complex64::new(q.c, q.d);
    [[c1, c2], [-c2.conj(), c1.conj()]]
}

fn c1_quaternion_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_norm, mut worst_adj) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (p, q) = (rand_q(&mut rng), rand_q(&mut rng));
        worst_norm = worst_norm.max(((p * q).norm() - p.norm() * q.norm()).abs());
        let (a, b) = (adjoint_oracle(p), adjoint_oracle(q));
        let pq = adjoint_oracle(p * q);
        for i in 0..2 {
            for j in 0..2 {
                let prod = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                worst_adj = worst_adj.max((prod - pq[i][j]).norm());
            }
        }
        let lib = complex_adjoint(&QuaternionMatrix::from_fn(1, 1, |_, _| p));
        for i in 0..2 {
            for j in 0..2 {
                worst_adj = worst_adj.max((lib[(i, j)] - a[i][j]).norm());
            }
        }
    }
    // matrix homomorphism on small random matrices
    for _ in 0..20 {
        let p = rand_qmat(&mut rng, 4, 3);
        let q = rand_qmat(&mut rng, 3, 5);
        let lhs = complex_adjoint(&p.matmul(&q));
        let rhs: Mat<Complex64> = &complex_adjoint(&p) * &complex_adjoint(&q);
        for i in 0..lhs.nrows() {
            for j in 0..lhs.ncols() {
                worst_adj = worst_adj.max((lhs[(i, j)] - rhs[(i, j)]).norm());
            }
        }
    }
    outcome(
        worst_norm <= NORM_MUL_TOL && worst_adj <= ADJOINT_TOL,
        format!("max ||pq|-|p||q|| = {worst_norm:.2e}, max adjoint error = {worst_adj:.2e}"),
    )
}

fn c2_qsvd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_recon, mut worst_sigma) = (0.0f64, 0.0f64);
    for &(m, n) in &[(1, 1), (3, 2), (2, 5), (8, 8), (16, 9), (24, 32), (32, 24)] {
        for _ in 0..3 {
            let q = rand_qmat(&mut rng, m, n);
            let s = qsvd(&q).expect("qsvd");
            let sv = QuaternionMatrix::from_real_diag(&s.sigma);
            let recon = s.u.matmul(&sv).matmul(&s.v.conj_transpose());
            worst_recon = worst_recon.max((&recon - &q).fro_norm() / q.fro_norm());
            // independent oracle: nalgebra SVD of the complex adjoint, pairs deduplicated
            let adj = complex_adjoint(&q);
            let na = DMatrix::from_fn(2 * m, 2 * n, |i, j| adj[(i, j)]);
            let mut sv_adj: Vec<f64> = na.singular_values().iter().copied().collect();
            sv_adj.sort_by(|a, b| b.total_cmp(a));
            let dedup: Vec<f64> = sv_adj.iter().step_by(2).copied().collect();
            let scale = dedup[0].max(1.0);
            for (k, &expected) in dedup.iter().enumerate() {
                let got = s.sigma.get(k).copied().unwrap_or(0.0);
                worst_sigma = worst_sigma.max((got - expected).abs() / scale);
            }
        }
    }
    outcome(
        worst_recon <= QSVD_RECON_TOL && worst_sigma <= QSVD_SIGMA_TOL,
        format!(
            "max relative reconstruction = {worst_recon:.2e}, max sigma error = {worst_sigma:.2e}"
        ),
    )
}

fn c3_prox_oracles() -> Outcome {
    let y = QuaternionMatrix::from_real_diag(&[3.0, 1.0]);
    let p = nuclear_prox(&y, 2.0).expect("prox");
    let closed = QuaternionMatrix::from_real_diag(&[1.0, 0.0]);
    let closed_err = (&p - &closed).max_modulus();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_firm = f64::NEG_INFINITY;
    for _ in 0..100 {
        let (x, z) = (rand_qmat(&mut rng, 6, 4), rand_qmat(&mut rng, 6, 4));
        let lam = rng.gen_range(0.1..1.5);
        let (px, pz) = (
            nuclear_prox(&x, lam).unwrap(),
            nuclear_prox(&z, lam).unwrap(),
        );
        let dp = &px - &pz;
        let lhs = dp.fro_norm().powi(2);
        let rhs = dp.real_inner(&(&x - &z));
        worst_firm = worst_firm.max((lhs - rhs) / rhs.abs().max(1.0));
    }

    let y = rand_qmat(&mut rng, 10, 10);
    let tau = 0.6;
    let s = soft_threshold(&y, tau, ShrinkMode::Entrywise);
    let mut worst_shrink = 0.0f64;
    for (a, b) in y.as_slice().iter().zip(s.as_slice()) {
        let modulus = (b.norm() - (a.norm() - tau).max(0.0)).abs();
        let direction = if b.norm() > 0.0 {
            (*b / b.norm() - *a / a.norm()).norm()
        } else {
            0.0
        };
        worst_shrink = worst_shrink.max(modulus).max(direction);
    }
    outcome(
        closed_err <= PROX_EXACT_TOL && worst_firm <= FIRM_SLACK && worst_shrink <= SHRINK_TOL,
        format!("diag(3,1) error = {closed_err:.2e}, firm nonexpansive excess = {worst_firm:.2e}, shrink law error = {worst_shrink:.2e}"),
    )
}

fn c4_fft() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut rt, mut diag, mut pars) = (0.0f64, 0.0f64, 0.0f64);
    for &(m, n) in &[(8, 8), (16, 12), (31, 17), (64, 64)] {
        let x = rand_qmat(&mut rng, m, n);
        let spec = qfft2(&x);
        rt = rt.max((&iqfft2(&spec) - &x).max_modulus());
        let energy = x.fro_norm().powi(2);
        pars = pars.max((spec.energy() / (m * n) as f64 - energy).abs() / energy);
        let mut g = spec.clone();
        g.apply_transfer(&transfer1(m, n));
        let spatial = grad1(&x);
        diag = diag.max((&iqfft2(&g) - &spatial).fro_norm() / spatial.fro_norm());
    }
    outcome(
        rt <= FFT_ROUND_TRIP_TOL && diag <= FFT_DIAG_TOL && pars <= PARSEVAL_TOL,
        format!(
            "round trip = {rt:.2e}, gradient diagonalization = {diag:.2e}, Parseval = {pars:.2e}"
        ),
    )
}

fn c5_qfed_convergence(img: &RgbImage) -> Outcome {
    let q = crop(img, 96, 96, 64);
    let cfg = QfedConfig {
        tol: QFED_TOL,
        max_iter: QFED_MAX_ITER,
        ..Default::default()
    };
    let dict = build_dictionary(64, cfg.atom_count).unwrap();
    let res = decompose(&q, &cfg, &dict).expect("decompose");
    outcome(
        res.converged
            && res.rel_diff <= QFED_TOL
            && res.iterations <= QFED_MAX_ITER
            && res.constraint_residual <= RESIDUAL_TOL,
        format!(
            "{} iterations, rel diff = {:.2e}, constraint residual = {:.2e}",
            res.iterations, res.rel_diff, res.constraint_residual
        ),
    )
}

fn c6_block_descent(img: &RgbImage) -> Outcome {
    let q = crop(img, 96, 96, 64);
    let cfg = QfedConfig {
        shrink_mode: ShrinkMode::Entrywise,
        ..Default::default()
    };
    let dict = build_dictionary(64, cfg.atom_count).unwrap();
    let mut s = QfedSolver::new(&q, &cfg, &dict).expect("solver");
    let mut worst: Option<(f64, Block, usize)> = None;
    for it in 0..10 {
        for block in Block::ORDER {
            let before = s.partial_objective(block).unwrap();
            s.update(block).unwrap();
            let after = s.partial_objective(block).unwrap();
            let excess = (after - before) / before.abs().max(1.0);
            if worst.is_none_or(|(w, _, _)| excess > w) {
                worst = Some((excess, block, it));
            }
        }
        s.update_multipliers().unwrap();
    }
    let (w, block, it) = worst.unwrap();
    outcome(
        w <= OBJECTIVE_SLACK,
        format!(
            "largest relative change {w:.2e} ({block:?}, iteration {})",
            it + 1
        ),
    )
}

fn c7_idempotence(img: &RgbImage) -> Outcome {
    let q = to_quaternion(img);
    let out = fuse(&[q.clone(), q.clone()], &FuseConfig::default()).expect("fuse");
    let differing = out
        .fused
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .filter(|(a, b)| a != b)
        .count();
    outcome(differing == 0, format!("{differing} differing pixels"))
}

fn c8_synthetic(
    img: &RgbImage,
) -> (
    Outcome,
    Option<(
        QuaternionMatrix,
        Vec<QuaternionMatrix>,
        qfuse::patch::PatchGrid,
    )>,
) {
    let (rep, out) = evaluate_split(img, Split::LeftRight, SYNTH_SIGMA, &FuseConfig::default())
        .expect("synthetic run");
    let best = rep
        .psnr_inputs
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = rep.psnr_fused >= MIN_FUSED_PSNR
        && rep.psnr_gain >= MIN_PSNR_GAIN
        && rep.base_map_accuracy >= MIN_MAP_ACCURACY
        && rep.detail_map_accuracy >= MIN_MAP_ACCURACY;
    let detail = format!(
        "fused PSNR {:.2} dB (best input {:.2}, gain {:.2}), map accuracy base {:.4} detail {:.4}",
        rep.psnr_fused, best, rep.psnr_gain, rep.base_map_accuracy, rep.detail_map_accuracy
    );
    let set = qfuse::pipeline::synth_split(img, Split::LeftRight, SYNTH_SIGMA).unwrap();
    let inputs = set.inputs.iter().map(to_quaternion).collect();
    (
        outcome(pass, detail),
        Some((out.fused, inputs, out.detail_grid)),
    )
}

fn c9_thirds(img: &RgbImage) -> Outcome {
    let (rep, _) = evaluate_split(img, Split::Thirds, SYNTH_SIGMA, &FuseConfig::default())
        .expect("synthetic run");
    outcome(
        rep.patch_accuracy >= MIN_PATCH_ACCURACY,
        format!(
            "{:.4} of non-seam patches equal the ground truth (fused PSNR {:.2} dB, map accuracy base {:.4} detail {:.4})",
            rep.patch_accuracy, rep.psnr_fused, rep.base_map_accuracy, rep.detail_map_accuracy
        ),
    )
}

fn c10_qssim() -> Outcome {
    let p = SsimParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let patch = |rng: &mut ChaCha8Rng| -> Vec<Quaternion> {
        (0..64)
            .map(|_| Quaternion::pure(rng.gen(), rng.gen(), rng.gen()))
            .collect()
    };
    let (mut self_err, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    let mut tau_sum_exact = true;
    for _ in 0..1000 {
        let (x, y) = (patch(&mut rng), patch(&mut rng));
        self_err = self_err.max((qssim_score(&x, &x, &p) - 1.0).abs());
        let s = qssim_score(&x, &y, &p);
        lo = lo.min(s);
        hi = hi.max(s);
        let w = adaptive_weights(&[rng.gen(), rng.gen()], p.epsilon);
        tau_sum_exact &= w[0] + w[1] == 1.0;
    }
    let half = (adaptive_weights(&[0.37, 0.37], 1e-10)[0] - 0.5).abs();
    outcome(
        self_err <= QSSIM_TOL && lo >= 0.0 && hi <= 1.0 + QSSIM_TOL && tau_sum_exact && half <= TAU_HALF_TOL,
        format!(
            "self score error {self_err:.2e}, scores in [{lo:.4}, {hi:.6}], tau sum exact: {tau_sum_exact}, |tau1 - 0.5| = {half:.2e}"
        ),
    )
}

fn c11_copy_only(
    run: Option<&(
        QuaternionMatrix,
        Vec<QuaternionMatrix>,
        qfuse::patch::PatchGrid,
    )>,
) -> Outcome {
    let Some((fused, inputs, grid)) = run else {
        return outcome(false, "criterion 8 output unavailable".into());
    };
    let v = copy_violations(fused, inputs, grid);
    outcome(
        v == 0,
        format!(
            "{v} of {} patches are not verbatim input copies",
            grid.patch_count()
        ),
    )
}

fn report(n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let pass = o.pass && in_time;
    println!(
        "criterion {n:>2} [{}] {name}: {}; {:.2} s (budget {} s{})",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", exceeded" }
    );
    pass
}

fn main() {
    let img = test_image();
    let s = Duration::from_secs;
    let mut results = vec![
        report(1, "quaternion algebra", s(1), c1_quaternion_algebra),
        report(2, "QSVD", s(5), c2_qsvd),
        report(3, "proximal operators", s(5), c3_prox_oracles),
        report(4, "FFT suite", s(2), c4_fft),
        report(5, "decomposition convergence", s(60), || {
            c5_qfed_convergence(&img)
        }),
        report(6, "per-block objective decrease", s(60), || {
            c6_block_descent(&img)
        }),
        report(7, "fusion idempotence", s(60), || c7_idempotence(&img)),
    ];
    let mut run8 = None;
    results.push(report(
        8,
        "synthetic two-input ground truth",
        s(120),
        || {
            let (o, run) = c8_synthetic(&img);
            run8 = run;
            o
        },
    ));
    results.push(report(
        9,
        "synthetic three-input ground truth",
        s(180),
        || c9_thirds(&img),
    ));
    results.push(report(10, "QSSIM and adaptive weights", s(2), c10_qssim));
    results.push(report(11, "copy-only output", s(10), || {
        c11_copy_only(run8.as_ref())
    }));
    let failed = results.iter().filter(|&&p| !p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
