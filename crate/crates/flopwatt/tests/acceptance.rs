//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances are fixed constants below.

#[path = "../../core/tests/support/oracle.rs"]
#[allow(dead_code)]
mod oracle;

use std::process::ExitCode;

use flopwatt::csv_io::{parse_csv, write_csv};
use flopwatt::report::relative_report;
use flopwatt_core::data::{embedded_table, Dataset, EnergyRecord, JOULES_PER_KWH, TABLE_STEPS};
use flopwatt_core::flops::{denoise_flops, denoise_share};
use flopwatt_core::law::{features_for, fit, predict_log_kwh, Column, FeatureVector, ScalingLaw};
use flopwatt_core::validation::{fit_dataset, kfold_indices, published_law, run_cross_model};
use flopwatt_core::{GpuId, InferenceConfig, ModelId, Precision, Resolution};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use ModelId::{Flux, Qwen, Sd2, Sd35};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn c1_flop_oracle() -> Outcome {
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for model in ModelId::ALL {
        for res in Resolution::SWEEP {
            let (h, w) = (i128::from(res.height()), i128::from(res.width()));
            checked += 1;
            if denoise_flops(model, res) as i128 != oracle::denoise(model.name(), h, w) {
                mismatches.push(format!("{model}@{res}"));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{}/{checked} exact; mismatches: {mismatches:?}",
            checked - mismatches.len()
        ),
    )
}

fn c2_denoise_dominance() -> Outcome {
    let mut min = f64::INFINITY;
    let mut at = String::new();
    for model in [Flux, Sd35, Qwen] {
        for res in Resolution::SWEEP {
            let share = denoise_share(model, res, 10).unwrap();
            if share < min {
                min = share;
                at = format!("{model}@{res}");
            }
        }
    }
    outcome(
        min > 0.90,
        format!("min share {min:.4} at {at} (need > 0.90)"),
    )
}

fn fit_check(model: ModelId, min_r2: f64, alpha: f64, beta_dtype: Option<f64>) -> Outcome {
    let (law, diag) = match fit_dataset(&embedded_table(model)) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("fit failed: {e}")),
    };
    let mut pass = diag.r2 >= min_r2 && (law.alpha - alpha).abs() <= 0.05;
    let mut detail = format!(
        "R2 {:.4} (>= {min_r2}), alpha {:.4} (published {alpha} +/- 0.05)",
        diag.r2, law.alpha
    );
    match beta_dtype {
        Some(b) => {
            pass &= (law.beta_dtype - b).abs() <= 0.30;
            detail += &format!(
                ", beta_dtype {:.4} (published {b} +/- 0.30)",
                law.beta_dtype
            );
        }
        None => {
            let dropped = law.dropped_columns.contains(&Column::Fp32);
            pass &= dropped && law.beta_dtype == 0.0;
            detail += &format!(", fp32 dropped={dropped} beta_dtype={}", law.beta_dtype);
        }
    }
    outcome(pass, detail)
}

fn c6_forward_prediction() -> Outcome {
    let law = published_law(Flux).unwrap();
    let table = embedded_table(Flux);
    let predict = |c: &InferenceConfig| {
        predict_log_kwh(&law, &features_for(c).unwrap()).exp() * JOULES_PER_KWH
    };
    let worst = table
        .iter()
        .map(|r| (rel(predict(&r.config), r.energy_joules), r.config))
        .fold(
            (0.0, None),
            |acc, (e, c)| if e > acc.0 { (e, Some(c)) } else { acc },
        );
    let spot = |side, steps, precision, cfg, printed: f64, derived: f64| {
        let config = InferenceConfig::new(Flux, Resolution::square(side).unwrap())
            .with_steps(steps)
            .with_precision(precision)
            .with_cfg(cfg)
            .with_prompts(100);
        let p = predict(&config);
        (p, rel(p, printed) <= 0.15 && rel(p, derived) <= 0.05)
    };
    let (low, low_ok) = spot(256, 10, Precision::Fp16, false, 2.95e4, 2.7e4);
    let (high, high_ok) = spot(1024, 50, Precision::Fp32, true, 1.21e7, 1.17e7);
    let c = worst.1.unwrap();
    outcome(
        worst.0 <= 0.30 && low_ok && high_ok,
        format!(
            "worst of 80: {:.1}% at {}/{} steps/{}/cfg={} (<= 30%); spots {low:.3e} vs 2.95e4, {high:.3e} vs 1.21e7 (<= 15%)",
            worst.0 * 100.0,
            c.resolution,
            c.steps,
            c.precision,
            c.cfg
        ),
    )
}

fn c7_cross_model() -> Outcome {
    let data = flopwatt_core::data::embedded_tables(&[Flux, Sd35, Qwen]);
    let mut pass = true;
    let mut parts = Vec::new();
    for (train, test) in [
        ([Qwen, Sd35], Flux),
        ([Flux, Sd35], Qwen),
        ([Flux, Qwen], Sd35),
    ] {
        match run_cross_model(&train, test, &data) {
            Ok(report) => {
                let d = report.test_diagnostics.unwrap();
                pass &= d.spearman >= 0.95 && d.pearson >= 0.90;
                parts.push(format!("->{test}: Rs {:.3} R {:.3}", d.spearman, d.pearson));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("->{test}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; ") + " (need Rs >= 0.95, R >= 0.90)")
}

fn c8_units() -> Outcome {
    let table = embedded_table(Qwen);
    let wh = |side: u32, steps, cfg| {
        table
            .iter()
            .find(|r| {
                r.config.resolution.height() == side
                    && r.config.steps == steps
                    && r.config.cfg == cfg
            })
            .unwrap()
            .per_image_wh()
    };
    let (low, high) = (wh(256, 10, false), wh(1024, 50, true));
    outcome(
        rel(low, 0.051) <= 0.01 && rel(high, 3.58) <= 0.01,
        format!("{low:.4} Wh vs 0.051, {high:.4} Wh vs 3.58 (+/- 1%)"),
    )
}

fn monotone(model: ModelId) -> bool {
    let table = embedded_table(model);
    let energy = |res: Resolution, steps, p, cfg| {
        table
            .iter()
            .find(|r| {
                r.config.resolution == res
                    && r.config.steps == steps
                    && r.config.precision == p
                    && r.config.cfg == cfg
            })
            .map(|r| r.energy_joules)
    };
    let precisions: &[Precision] = if model == Qwen {
        &[Precision::Fp16]
    } else {
        &Precision::ALL
    };
    precisions.iter().all(|&p| {
        [false, true].iter().all(|&cfg| {
            let by_steps = Resolution::SWEEP.iter().all(|&res| {
                let s: Vec<_> = TABLE_STEPS
                    .iter()
                    .map(|&st| energy(res, st, p, cfg).unwrap())
                    .collect();
                s.windows(2).all(|w| w[0] < w[1])
            });
            let by_area = TABLE_STEPS.iter().all(|&st| {
                let s: Vec<_> = Resolution::SWEEP
                    .iter()
                    .map(|&res| energy(res, st, p, cfg).unwrap())
                    .collect();
                s.windows(2).all(|w| w[0] < w[1])
            });
            by_steps && by_area
        })
    })
}

fn c9_relative_report() -> Outcome {
    let rows = relative_report(&embedded_table(Flux), None).unwrap();
    let max = rows.iter().map(|r| r.relative).fold(0.0, f64::max);
    let expected = 1.21e7 / 2.95e4;
    let monotone_all = ModelId::ALL.iter().all(|&m| monotone(m));
    outcome(
        rel(max, expected) <= 0.01 && monotone_all,
        format!("max/min {max:.2} vs {expected:.2} (+/- 1%); all tables monotone in steps and area: {monotone_all}"),
    )
}

fn runner() -> TestRunner {
    let config = Config {
        cases: 128,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn arb_config(i: usize) -> impl Strategy<Value = InferenceConfig> {
    (
        prop::sample::select(vec![Flux, Sd35, Sd2]),
        1u32..=16,
        1u32..=16,
        1u32..=60,
        1u32..=100,
        any::<bool>(),
    )
        .prop_map(move |(model, h, w, steps, prompts, cfg)| {
            InferenceConfig::new(model, Resolution::new(64 * h, 64 * w).unwrap())
                .with_steps(steps)
                .with_prompts(prompts)
                .with_cfg(cfg)
                .with_gpu(GpuId::ALL[i % 3])
                .with_precision(if i.is_multiple_of(2) {
                    Precision::Fp16
                } else {
                    Precision::Fp32
                })
        })
}

fn arb_design() -> impl Strategy<Value = Vec<InferenceConfig>> {
    (12usize..48).prop_flat_map(|n| (0..n).map(arb_config).collect::<Vec<_>>())
}

fn arb_law() -> impl Strategy<Value = ScalingLaw> {
    (
        -25.0f64..-15.0,
        0.5f64..1.5,
        -1.0f64..3.0,
        -1.0f64..1.0,
        -1.0f64..1.0,
        -0.5f64..0.5,
    )
        .prop_map(|(a, b, c, d, e, f)| {
            ScalingLaw::from_coefficients([a, b, c, d, e, f], Vec::new())
        })
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn property(name: &str, run: impl FnOnce(&mut TestRunner) -> Result<(), String>) -> (String, bool) {
    match run(&mut runner()) {
        Ok(()) => (format!("{name} ok"), true),
        Err(e) => (format!("{name} FAILED: {e}"), false),
    }
}

fn c10_properties() -> Outcome {
    let recovery = property("zero-noise recovery <= 1e-8", |r| {
        r.run(&(arb_design(), arb_law()), |(configs, truth)| {
            let obs: Vec<(FeatureVector, f64)> = configs
                .iter()
                .map(|c| {
                    let f = features_for(c).unwrap();
                    (f, predict_log_kwh(&truth, &f))
                })
                .collect();
            let (law, _) = fit(&obs).unwrap();
            for column in Column::ALL {
                let err = (law.coefficient(column) - truth.coefficient(column)).abs();
                prop_assert!(err <= 1e-8, "{:?} off by {}", column, err);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    let orthogonality = property("residual orthogonality <= 1e-6 scaled", |r| {
        r.run(
            &(arb_design(), arb_law(), any::<u64>()),
            |(configs, truth, seed)| {
                let obs: Vec<(FeatureVector, f64)> = configs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let f = features_for(c).unwrap();
                        let noise =
                            splitmix64(seed.wrapping_add(i as u64)) as f64 / u64::MAX as f64 - 0.5;
                        (f, predict_log_kwh(&truth, &f) + 0.2 * noise)
                    })
                    .collect();
                let (law, _) = fit(&obs).unwrap();
                let res: Vec<f64> = obs
                    .iter()
                    .map(|(f, y)| y - predict_log_kwh(&law, f))
                    .collect();
                let r_norm = res.iter().map(|x| x * x).sum::<f64>().sqrt();
                for j in 0..6 {
                    let col: Vec<f64> = obs.iter().map(|(f, _)| f.to_array()[j]).collect();
                    let c_norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let inner: f64 = col.iter().zip(&res).map(|(c, r)| c * r).sum();
                    prop_assert!(
                        inner.abs() <= 1e-6 * c_norm * r_norm,
                        "column {} inner {}",
                        j,
                        inner
                    );
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
    });
    let cfg_shift = property("CFG shift = alpha*ln2", |r| {
        r.run(&(arb_config(0), arb_law()), |(config, law)| {
            let off = predict_log_kwh(&law, &features_for(&config.with_cfg(false)).unwrap());
            let on = predict_log_kwh(&law, &features_for(&config.with_cfg(true)).unwrap());
            prop_assert!((on - off - law.alpha * std::f64::consts::LN_2).abs() <= 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    let kfold = property("k-fold partition", |r| {
        r.run(&(2usize..400, 2usize..20, any::<u64>()), |(n, k, seed)| {
            prop_assume!(n >= k);
            let folds = kfold_indices(n, k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(&folds, &kfold_indices(n, k, seed).unwrap());
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    let csv = property("CSV round trip", |r| {
        let record = (0usize..3, arb_config(0), 1e-3f64..1e9, "[a-z0-9 ,]{0,8}").prop_map(
            |(g, config, e, source)| EnergyRecord {
                config: config.with_gpu(GpuId::ALL[g]),
                energy_joules: e,
                source,
            },
        );
        r.run(&prop::collection::vec(record, 0..30), |records| {
            let mut kept: Vec<EnergyRecord> = Vec::new();
            for rec in records {
                if !kept
                    .iter()
                    .any(|k| k.config == rec.config && k.source == rec.source)
                {
                    kept.push(rec);
                }
            }
            let dataset = Dataset::new(kept).unwrap();
            prop_assert_eq!(parse_csv(&write_csv(&dataset)).unwrap(), dataset);
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    let results = [recovery, orthogonality, cfg_shift, kfold, csv];
    let pass = results.iter().all(|(_, ok)| *ok);
    outcome(
        pass,
        results
            .iter()
            .map(|(s, _)| s.as_str())
            .collect::<Vec<_>>()
            .join("; "),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("FLOP oracle equivalence", c1_flop_oracle),
        ("denoise dominance", c2_denoise_dominance),
        ("fit reproduction, Flux", || {
            fit_check(Flux, 0.99, 0.989, Some(2.04))
        }),
        ("fit reproduction, SD3.5", || {
            fit_check(Sd35, 0.99, 0.969, Some(1.90))
        }),
        ("fit reproduction, Qwen", || {
            fit_check(Qwen, 0.98, 0.992, None)
        }),
        ("forward prediction", c6_forward_prediction),
        ("cross-model generalization", c7_cross_model),
        ("unit pipeline", c8_units),
        ("relative report", c9_relative_report),
        ("property suites", c10_properties),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
