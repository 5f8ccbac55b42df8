//! `enfgrid simulate`: synthetic multi-site bundle — per-site frequency
//! CSVs, optional waveforms, an anchor index, and a manifest recording
//! every parameter so the run can be reproduced byte for byte.

use std::path::{Path, PathBuf};

use clap::Args;
use enfgrid_core::gridsim::{
    add_awgn_to_enf, five_city_sites, simulate_enf_grid, subseed, synthesize_waveform,
    EventConfig, SimConfig,
};
use enfgrid_core::types::AnchorSite;
use enfgrid_core::{io, Error};
use serde::Serialize;

use crate::{CliError, CliResult};

// Seed-splitting offsets so per-site noise and waveform streams never
// collide with the trial subseeds used by sweeps.
const ENF_NOISE_SEED_BASE: u64 = 0x10000;
const WAVEFORM_SEED_BASE: u64 = 0x20000;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// SimConfig TOML/JSON (alternative to --preset five-city).
    #[arg(long)]
    pub sim_config: Option<PathBuf>,
    /// Simulated duration in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Enable the propagating disturbance-event layer.
    #[arg(long)]
    pub events: bool,
    /// Add detail-band white noise to the emitted frequency series.
    #[arg(long)]
    pub enf_snr_db: Option<f64>,
    /// Skip waveform synthesis (frequency CSVs and manifest only).
    #[arg(long)]
    pub skip_wav: bool,
    #[arg(long, default_value_t = 400.0)]
    pub sample_rate: f64,
    /// Waveform SNR in dB (inf = clean tone).
    #[arg(long, default_value_t = f64::INFINITY)]
    pub wav_snr_db: f64,
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
}

#[derive(Serialize)]
struct WaveformParams {
    sample_rate: f64,
    amplitude: f64,
    /// None = clean tone (JSON cannot carry infinity).
    snr_db: Option<f64>,
}

#[derive(Serialize)]
struct SiteFiles {
    name: String,
    enf_csv: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    wav: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    sim: &'a SimConfig,
    frames: usize,
    enf_snr_db: Option<f64>,
    waveforms: Option<WaveformParams>,
    anchor_index: &'static str,
    sites: Vec<SiteFiles>,
}

fn load_sim_config(path: &Path) -> CliResult<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    let parsed = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display()))),
        Some("json") => serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display()))),
        _ => Err(Error::Format(format!(
            "{}: sim config files must end in .toml or .json",
            path.display()
        ))),
    }?;
    Ok(parsed)
}

pub fn run(args: &SimulateArgs, five_city: bool, out_dir: &Path) -> CliResult<()> {
    let mut sim = match (&args.sim_config, five_city) {
        (Some(path), _) => load_sim_config(path)?,
        (None, true) => SimConfig::new(
            five_city_sites(),
            args.duration.unwrap_or(3600.0),
            args.seed.unwrap_or(1),
        ),
        (None, false) => {
            return Err(CliError::Usage(
                "simulate needs --sim-config <file> or --preset five-city".into(),
            ))
        }
    };
    if let Some(d) = args.duration {
        sim.duration_seconds = d;
    }
    if let Some(s) = args.seed {
        sim.seed = s;
    }
    if args.events && sim.events.is_none() {
        sim.events = Some(EventConfig::default());
    }

    let clean = simulate_enf_grid(&sim)?;
    let sites: Vec<AnchorSite> = match args.enf_snr_db {
        None => clean,
        Some(snr) => clean
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                let noisy =
                    add_awgn_to_enf(&a.enf, snr, subseed(sim.seed, ENF_NOISE_SEED_BASE + i as u64))?;
                AnchorSite::new(a.name, a.position, noisy)
            })
            .collect::<enfgrid_core::Result<_>>()?,
    };

    io::write_anchor_bundle(&out_dir.join("anchors.json"), &sites)?;

    let mut site_files = Vec::with_capacity(sites.len());
    for (i, site) in sites.iter().enumerate() {
        let wav = if args.skip_wav {
            None
        } else {
            let rec = synthesize_waveform(
                &site.enf,
                args.sample_rate,
                args.amplitude,
                args.wav_snr_db,
                subseed(sim.seed, WAVEFORM_SEED_BASE + i as u64),
            )?;
            let name = format!("{}.wav", site.name);
            io::write_wav(&out_dir.join(&name), &rec)?;
            Some(name)
        };
        site_files.push(SiteFiles {
            name: site.name.clone(),
            enf_csv: format!("{}.csv", site.name),
            wav,
        });
    }

    let frames = sites[0].enf.len();
    let manifest = Manifest {
        sim: &sim,
        frames,
        enf_snr_db: args.enf_snr_db,
        waveforms: (!args.skip_wav).then(|| WaveformParams {
            sample_rate: args.sample_rate,
            amplitude: args.amplitude,
            snr_db: args.wav_snr_db.is_finite().then_some(args.wav_snr_db),
        }),
        anchor_index: "anchors.json",
        sites: site_files,
    };
    super::write_json_pretty(&out_dir.join("manifest.json"), &manifest)?;
    println!(
        "simulate: {} site(s) x {frames} frames (seed {}) -> {}",
        sites.len(),
        sim.seed,
        out_dir.display()
    );
    Ok(())
}
