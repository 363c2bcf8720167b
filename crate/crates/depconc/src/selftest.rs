//! Quick programmatic invariant suites behind `depconc selftest`. Each check
//! is a compressed version of the crate's property tests, sized to run in a
//! few seconds; the full suites live in the test targets.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::gamma::{gamma_chazottes, gamma_goldstein, gamma_markov_theta, markov_chain_view};
use crate::linalg::Matrix;
use crate::mixing::{comparison_matrix, dobrushin_theta, interdependence_matrix};
use crate::model::{lipschitz_seminorm, oscillation_vector, JointLaw};
use crate::transport::{kl, tv, w1, wbar};
use crate::validate::{
    gibbs_invariance_gap, random_lipschitz_function, random_model, LawFamily, MetricStyle,
};

type Check = (&'static str, Result<(), String>);

fn simplex(rng: &mut ChaCha12Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..=1.0)).collect();
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
    v
}

fn line_metric(rng: &mut ChaCha12Rng, len: usize) -> Matrix {
    // Points on a line always satisfy the metric axioms.
    let mut positions = vec![0.0];
    for _ in 1..len {
        let step: f64 = rng.random_range(0.1..=2.0);
        positions.push(positions.last().unwrap() + step);
    }
    let mut m = Matrix::zeros(len, len);
    for i in 0..len {
        for j in 0..len {
            m[(i, j)] = (positions[i] - positions[j]).abs();
        }
    }
    m
}

fn check_duality(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..50 {
        let m = rng.random_range(2..=6);
        let p = simplex(&mut rng, m);
        let q = simplex(&mut rng, m);
        let metric = line_metric(&mut rng, m);
        let r = w1(&p, &q, &metric).map_err(|e| e.to_string())?;
        if r.duality_gap > 1e-8 {
            return Err(format!("trial {trial}: duality gap {}", r.duality_gap));
        }
        let (u, v) = &r.dual_potentials;
        for i in 0..m {
            for j in 0..m {
                if u[i] + v[j] > metric[(i, j)] + 1e-9 {
                    return Err(format!("trial {trial}: infeasible dual at ({i},{j})"));
                }
            }
        }
    }
    Ok(())
}

fn check_pinsker(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..100 {
        let m = rng.random_range(2..=8);
        let p = simplex(&mut rng, m);
        let q = simplex(&mut rng, m);
        let lhs = tv(&p, &q).map_err(|e| e.to_string())?;
        let rhs = (kl(&q, &p).map_err(|e| e.to_string())? / 2.0).sqrt();
        if lhs > rhs + 1e-12 {
            return Err(format!("trial {trial}: tv {lhs} above sqrt(kl/2) {rhs}"));
        }
    }
    Ok(())
}

fn check_dobrushin_contraction(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..50 {
        let m = rng.random_range(2..=5);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| simplex(&mut rng, m)).collect();
        let kernel = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let theta = dobrushin_theta(&kernel).map_err(|e| e.to_string())?;
        let p = simplex(&mut rng, m);
        let q = simplex(&mut rng, m);
        let pk = kernel.transpose().matvec(&p);
        let qk = kernel.transpose().matvec(&q);
        let lhs = tv(&pk, &qk).map_err(|e| e.to_string())?;
        let rhs = theta * tv(&p, &q).map_err(|e| e.to_string())?;
        if lhs > rhs + 1e-12 {
            return Err(format!("trial {trial}: contraction fails {lhs} > {rhs}"));
        }
    }
    Ok(())
}

fn check_delta_characterization(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..60 {
        let n = rng.random_range(1..=3);
        let model = random_model(rng.random(), n, 3, LawFamily::Explicit, MetricStyle::RandomAlpha)
            .map_err(|e| e.to_string())?;
        let f = random_lipschitz_function(&model, rng.random()).map_err(|e| e.to_string())?;
        let lip = lipschitz_seminorm(&f, &model).map_err(|e| e.to_string())?;
        let delta = oscillation_vector(&f, &model).map_err(|e| e.to_string())?;
        let lip_ok = lip <= 1.0 + 1e-12;
        let delta_ok = delta.max() <= 1.0 + 1e-12;
        if lip_ok != delta_ok {
            return Err(format!("trial {trial}: lip {lip} vs max delta {}", delta.max()));
        }
    }
    Ok(())
}

fn check_materialization(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..20 {
        let n = rng.random_range(2..=4);
        let model = random_model(rng.random(), n, 4, LawFamily::Markov, MetricStyle::UnitTrivial)
            .map_err(|e| e.to_string())?;
        let pmf = model.pmf().map_err(|e| e.to_string())?;
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("trial {trial}: pmf sums to {total}"));
        }
        let JointLaw::Markov { kernels, .. } = model.law() else {
            return Err("expected a markov law".to_string());
        };
        // The extracted next-step conditional must match the kernel row.
        for x in 0..model.coordinate(0).size() {
            let row = model
                .marginal_conditional(&[1], &[(0, x)])
                .map_err(|e| e.to_string())?;
            for (a, b) in row.iter().zip(kernels[0].row(x)) {
                if (a - b).abs() > 1e-12 {
                    return Err(format!("trial {trial}: conditional {a} vs kernel {b}"));
                }
            }
        }
    }
    Ok(())
}

fn check_comparison_identity(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..20 {
        let n = rng.random_range(2..=4);
        let model = random_model(rng.random(), n, 3, LawFamily::GibbsChain, MetricStyle::UnitTrivial)
            .map_err(|e| e.to_string())?;
        let c = interdependence_matrix(&model).map_err(|e| e.to_string())?;
        if !c.uniqueness_holds {
            continue;
        }
        let d = comparison_matrix(&c).map_err(|e| e.to_string())?;
        let dc = d.d.matmul(&c.c);
        for i in 0..n {
            for j in 0..n {
                let lhs = d.d[(i, j)] - if i == j { 1.0 } else { 0.0 };
                if (lhs - dc[(i, j)]).abs() > 1e-10 {
                    return Err(format!("trial {trial}: D - I differs from D C at ({i},{j})"));
                }
            }
        }
    }
    Ok(())
}

fn check_gamma_dominance(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..20 {
        let n = rng.random_range(2..=4);
        let family = if trial % 2 == 0 { LawFamily::Explicit } else { LawFamily::Markov };
        let model = random_model(rng.random(), n, 3, family, MetricStyle::UnitTrivial)
            .map_err(|e| e.to_string())?;
        let gold = gamma_goldstein(&model).map_err(|e| e.to_string())?;
        let chaz = gamma_chazottes(&model).map_err(|e| e.to_string())?;
        for i in 0..n {
            for j in 0..n {
                if gold.entries[(i, j)] > chaz.entries[(i, j)] + 1e-10 {
                    return Err(format!("trial {trial}: goldstein above chazottes at ({i},{j})"));
                }
            }
        }
        if let Ok(chain) = markov_chain_view(&model) {
            let theta = gamma_markov_theta(&chain, model.coordinates())
                .map_err(|e| e.to_string())?;
            for i in 0..n {
                for j in 0..n {
                    if gold.entries[(i, j)] > theta.entries[(i, j)] + 1e-10 {
                        return Err(format!(
                            "trial {trial}: goldstein above theta product at ({i},{j})"
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_gibbs_invariance(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..10 {
        let n = rng.random_range(2..=4);
        let family = match trial % 3 {
            0 => LawFamily::Explicit,
            1 => LawFamily::GibbsChain,
            _ => LawFamily::Product,
        };
        let model = random_model(rng.random(), n, 3, family, MetricStyle::UnitTrivial)
            .map_err(|e| e.to_string())?;
        let gap = gibbs_invariance_gap(&model).map_err(|e| e.to_string())?;
        if gap > 1e-12 {
            return Err(format!("trial {trial}: invariance gap {gap}"));
        }
    }
    Ok(())
}

fn check_herbst(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..3 {
        let n = rng.random_range(1..=3);
        let model = random_model(rng.random(), n, 3, LawFamily::Explicit, MetricStyle::UnitTrivial)
            .map_err(|e| e.to_string())?;
        let f = random_lipschitz_function(&model, rng.random()).map_err(|e| e.to_string())?;
        let residual =
            crate::bounds::herbst_residual(&model, &f, 0.5).map_err(|e| e.to_string())?;
        if residual > 1e-6 {
            return Err(format!("trial {trial}: residual {residual}"));
        }
    }
    Ok(())
}

fn check_wbar_sandwich(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..10 {
        let n = rng.random_range(1..=2);
        let model = random_model(rng.random(), n, 3, LawFamily::Explicit, MetricStyle::UnitTrivial)
            .map_err(|e| e.to_string())?;
        let mu = model.pmf().map_err(|e| e.to_string())?.to_vec();
        let nu = simplex(&mut rng, mu.len());
        let r = wbar(&mu, &nu, &model).map_err(|e| e.to_string())?;
        if r.lower > r.upper + 1e-12 {
            return Err(format!("trial {trial}: lower {} above upper {}", r.lower, r.upper));
        }
        let mut product_cost = Matrix::zeros(mu.len(), mu.len());
        for x in 0..mu.len() {
            let xs = model.decode_state(x);
            for y in 0..mu.len() {
                let ys = model.decode_state(y);
                product_cost[(x, y)] = model.product_distance(&xs, &ys);
            }
        }
        let w = w1(&mu, &nu, &product_cost).map_err(|e| e.to_string())?;
        if r.upper > w.value + 1e-9 {
            return Err(format!("trial {trial}: upper {} above w1 {}", r.upper, w.value));
        }
    }
    Ok(())
}

/// The named quick checks, in a stable order.
pub fn invariant_suite(seed: u64) -> Vec<Check> {
    vec![
        ("transport_duality", check_duality(seed ^ 0x01)),
        ("pinsker", check_pinsker(seed ^ 0x02)),
        ("dobrushin_contraction", check_dobrushin_contraction(seed ^ 0x03)),
        ("delta_characterization", check_delta_characterization(seed ^ 0x04)),
        ("materialization", check_materialization(seed ^ 0x05)),
        ("comparison_identity", check_comparison_identity(seed ^ 0x06)),
        ("gamma_dominance", check_gamma_dominance(seed ^ 0x07)),
        ("gibbs_invariance", check_gibbs_invariance(seed ^ 0x08)),
        ("herbst", check_herbst(seed ^ 0x09)),
        ("wbar_sandwich", check_wbar_sandwich(seed ^ 0x0a)),
    ]
}
