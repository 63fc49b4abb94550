//! Configuration files, job orchestration and report emission behind the
//! `sublevel-l2` binary.

pub mod config;
pub mod run;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use config::{load_config, parse_config, JobConfig, JobKind, LoadedConfig, Overrides, RunManifest};
pub use run::{run_job, run_manifest, summary_csv, JobOutcome, RunSummary, SUMMARY_FILE};

/// Environment variable capping worker threads (0 = automatic).
pub const THREADS_ENV: &str = "SUBLEVEL_L2_THREADS";

/// Output directory when neither `--out` nor the manifest names one.
pub const DEFAULT_OUT_DIR: &str = "out";

/// One CLI invocation. `kind = None` is `verify`: a manifest runs every
/// job, a single job file must declare its kind. With a kind, a manifest
/// runs only its jobs of that kind.
pub fn execute(kind: Option<JobKind>, config: &Path, out: Option<&Path>, ov: Overrides) -> Result<RunSummary> {
    let (manifest, manifest_out) = match load_config(config, ov)? {
        LoadedConfig::Manifest(m) => {
            let out_dir = m.output_dir.clone();
            let jobs: Vec<JobConfig> = match kind {
                Some(k) => m.jobs.into_iter().filter(|j| j.kind == Some(k)).collect(),
                None => m.jobs,
            };
            if let (Some(k), true) = (kind, jobs.is_empty()) {
                log::warn!("manifest has no `{}` jobs", k.as_str());
            }
            (RunManifest { jobs, ..m }, out_dir)
        }
        LoadedConfig::Job(job) => {
            let k = kind
                .or(job.kind)
                .ok_or_else(|| Error::config("kind", "required when verifying a single job"))?;
            let job = job.with_kind(k)?;
            (
                RunManifest {
                    version: config::MANIFEST_VERSION,
                    output_dir: None,
                    jobs: vec![job],
                },
                None,
            )
        }
    };
    let out_dir = out
        .map(Path::to_path_buf)
        .or(manifest_out)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    run_manifest(&manifest, &out_dir)
}

/// Reads `SUBLEVEL_L2_THREADS`; `None` means let rayon decide.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::config(THREADS_ENV, format!("`{v}` is not a thread count"))),
        },
    }
}

/// Shortest round-trip decimal form; infinities are `inf` / `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:?}")
    }
}
