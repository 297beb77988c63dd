use super::{SynthColumn as C, SynthSpec};
use crate::data::Domain::{self, Clinical, Patient, System};
use crate::{Error, Result};

pub const SPEC_NAMES: [&str; 3] = ["ischaemic-like", "haemorrhagic-like", "tiny"];

const BASE_LOS: f64 = 4.0;
const DISPERSION: f64 = 3.0;

const BED_BANDS: [&str; 5] = ["<50", "50-99", "100-199", "200-399", ">400"];

/// Named spec library.
pub fn default_specs() -> Vec<SynthSpec> {
    SPEC_NAMES
        .iter()
        .map(|n| spec_by_name(n).expect("library name"))
        .collect()
}

pub fn spec_by_name(name: &str) -> Result<SynthSpec> {
    match name {
        "ischaemic-like" => Ok(stroke_like(name, 12575, 25, 57)),
        "haemorrhagic-like" => Ok(stroke_like(name, 1970, 20, 56)),
        "tiny" => Ok(tiny()),
        other => Err(Error::InvalidSpec(format!(
            "unknown spec `{other}`; expected one of {}",
            SPEC_NAMES.join(", ")
        ))),
    }
}

/// Pure-noise filler alternating numeric, binary and three-level columns.
fn noise_block(prefix: &str, domain: Domain, count: usize, missing_every: usize) -> Vec<C> {
    (0..count)
        .map(|i| {
            let name = format!("{prefix}_{:02}", i + 1);
            let col = match i % 3 {
                0 => C::continuous(&name, domain, 50.0 + i as f64, 10.0, (0.0, 200.0), 1),
                1 => C::binary(&name, domain, 0.1 + 0.05 * (i % 7) as f64),
                _ => C::categorical(&name, domain, &["A", "B", "C"], &[0.5, 0.3, 0.2]),
            };
            if missing_every > 0 && i % missing_every == missing_every - 1 {
                col.missing(0.015)
            } else {
                col
            }
        })
        .collect()
}

fn patient_block() -> Vec<C> {
    vec![
        C::continuous("age", Patient, 72.0, 13.0, (18.0, 104.0), 0).effect(0.15),
        C::categorical("sex", Patient, &["Female", "Male"], &[0.45, 0.55]),
        C::categorical(
            "prestroke_mrs",
            Patient,
            &["0", "1", "2", "3", "4", "5"],
            &[0.45, 0.2, 0.12, 0.1, 0.09, 0.04],
        )
        .ordered()
        .effects(&[0.0, 0.08, 0.16, 0.24, 0.32, 0.4]),
        C::binary("lives_alone", Patient, 0.3).effects(&[0.0, 0.18]),
        C::continuous("bmi", Patient, 27.0, 5.0, (14.0, 60.0), 1).missing(0.01),
        C::binary("current_smoker", Patient, 0.18),
        C::binary("interpreter_required", Patient, 0.06),
    ]
}

fn stroke_like(name: &str, n_rows: usize, clinical: usize, system: usize) -> SynthSpec {
    let mut columns = patient_block();

    let clinical_fixed = vec![
        C::continuous("nihss", Clinical, 8.0, 6.0, (0.0, 42.0), 0).effect(0.35),
        C::clone_of("nihss_arrival", Clinical, "nihss", 0.15),
        C::clone_of("nihss_24h", Clinical, "nihss", 0.25),
        C::binary("dysphagia", Clinical, 0.3).effects(&[0.0, 0.25]),
        C::categorical(
            "discharge_destination",
            Clinical,
            &["Home", "Rehabilitation", "Residential care", "Other"],
            &[0.55, 0.3, 0.135, 0.015],
        )
        .effects(&[0.0, 0.45, 0.2, 0.0]),
        C::binary("thrombolysis", Clinical, 0.15).effects(&[0.0, -0.25]),
        C::binary("walk_independently", Clinical, 0.45).effects(&[0.0, -0.3]),
        C::continuous("glucose", Clinical, 7.2, 2.5, (2.0, 30.0), 1)
            .effect(0.12)
            .missing(0.05),
        C::binary("atrial_fibrillation", Clinical, 0.25)
            .effects(&[0.0, 0.2])
            .missing(0.08),
        C::continuous("cholesterol", Clinical, 4.8, 1.1, (1.5, 12.0), 1).missing(0.12),
        C::continuous("hba1c", Clinical, 6.1, 1.0, (3.5, 15.0), 1).missing(0.2),
    ];
    let n_fixed = clinical_fixed.len();
    columns.extend(clinical_fixed);
    columns.extend(noise_block(
        "clinical_marker",
        Clinical,
        clinical - n_fixed,
        0,
    ));

    let system_fixed = vec![
        C::binary("icu_access", System, 0.983).exact(),
        C::categorical(
            "hospital_beds",
            System,
            &BED_BANDS,
            &[0.0071, 0.0753, 0.25, 0.35, 0.3176],
        )
        .ordered()
        .exact()
        .effects(&[0.0, 0.0, 0.12, 0.2, 0.28]),
        C::binary("stroke_unit", System, 0.8).effects(&[0.0, -0.25]),
        C::binary("weekend_admission", System, 0.28).effects(&[0.0, 0.15]),
        C::binary("interhospital_transfer", System, 0.15).effects(&[0.0, 0.3]),
        C::binary("allied_health_weekend", System, 0.5).effects(&[0.0, -0.15]),
        C::binary("metro_site", System, 0.6),
        C::clone_of("metro_catchment", System, "metro_site", 0.01),
        C::clone_of("metro_network", System, "metro_site", 0.01),
    ];
    let n_fixed = system_fixed.len();
    columns.extend(system_fixed);
    columns.extend(noise_block(
        "service_indicator",
        System,
        system - n_fixed,
        6,
    ));

    SynthSpec {
        name: name.into(),
        n_rows,
        seed: 20240901,
        base_los: BASE_LOS,
        dispersion: DISPERSION,
        signal_scale: 1.0,
        outcome_column: "los_days".into(),
        columns,
    }
}

fn tiny() -> SynthSpec {
    SynthSpec {
        name: "tiny".into(),
        n_rows: 200,
        seed: 7,
        base_los: BASE_LOS,
        dispersion: DISPERSION,
        signal_scale: 1.0,
        outcome_column: "los_days".into(),
        columns: vec![
            C::continuous("age", Patient, 72.0, 13.0, (18.0, 104.0), 0).effect(0.3),
            C::categorical("sex", Patient, &["Female", "Male"], &[0.45, 0.55]),
            C::continuous("nihss", Clinical, 8.0, 6.0, (0.0, 42.0), 0).effect(0.6),
            C::binary("dysphagia", Clinical, 0.3).effects(&[0.0, 0.4]),
            C::continuous("glucose", Clinical, 7.2, 2.5, (2.0, 30.0), 1)
                .effect(0.2)
                .missing(0.05),
            C::binary("stroke_unit", System, 0.8)
                .effects(&[0.0, -0.4])
                .missing(0.01),
            C::categorical(
                "hospital_beds",
                System,
                &["<200", "200-399", ">400"],
                &[0.3, 0.4, 0.3],
            )
            .ordered()
            .effects(&[0.0, 0.15, 0.3]),
            C::continuous("staff_ratio", System, 1.0, 0.2, (0.1, 3.0), 2),
        ],
    }
}
