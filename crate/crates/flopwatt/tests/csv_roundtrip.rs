use flopwatt::csv_io::{parse_csv, write_csv};
use flopwatt_core::data::{embedded_tables, Dataset, EnergyRecord};
use flopwatt_core::{GpuId, InferenceConfig, ModelId, Precision, Resolution};
use proptest::prelude::*;

fn record() -> impl Strategy<Value = EnergyRecord> {
    (
        prop::sample::select(ModelId::ALL.to_vec()),
        prop::sample::select(GpuId::ALL.to_vec()),
        any::<bool>(),
        any::<bool>(),
        1u32..=32,
        1u32..=32,
        1u32..=200,
        1u32..=1000,
        1e-3f64..1e9,
        "[a-z ,\"]{0,12}",
    )
        .prop_map(
            |(model, gpu, fp32, cfg, h, w, steps, prompts, energy, source)| {
                let precision = if fp32 && model != ModelId::Qwen {
                    Precision::Fp32
                } else {
                    Precision::Fp16
                };
                EnergyRecord {
                    config: InferenceConfig {
                        model,
                        resolution: Resolution::new(64 * h, 64 * w).unwrap(),
                        steps,
                        precision,
                        cfg,
                        num_prompts: prompts,
                        gpu,
                    },
                    energy_joules: energy,
                    source,
                }
            },
        )
}

proptest! {
    #[test]
    fn parse_after_write_is_identity(records in prop::collection::vec(record(), 0..40)) {
        // Keep the first of any conflicting (config, source) pair.
        let mut kept: Vec<EnergyRecord> = Vec::new();
        for r in records {
            if !kept.iter().any(|k| k.config == r.config && k.source == r.source) {
                kept.push(r);
            }
        }
        let dataset = Dataset::new(kept).unwrap();
        prop_assert_eq!(parse_csv(&write_csv(&dataset)).unwrap(), dataset);
    }
}

#[test]
fn embedded_tables_round_trip() {
    let all = embedded_tables(&ModelId::ALL);
    let bytes = write_csv(&all);
    assert_eq!(parse_csv(&bytes).unwrap(), all);
    assert_eq!(write_csv(&parse_csv(&bytes).unwrap()), bytes);
}
