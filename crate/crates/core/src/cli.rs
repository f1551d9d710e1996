//! Command execution behind the `tenrank` binary.
//!
//! [`run`] is a pure function of its [`RunConfig`] and the input files: it
//! returns the output document and the exit status, so identical
//! configurations produce byte-identical documents.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::action::{act, GlTriple};
use crate::approx::{build_leap_family, rank_n_approximate};
use crate::error::Error;
use crate::io::{parse_matrix, parse_tensor, serialize_tensor};
use crate::linalg::{Matrix, Tolerances};
use crate::oracle::{als_fit, decision_of, AlsParams};
use crate::rank::{bi_rank_check, max_rank_value, Verdict};
use crate::rng::{random_matrix, seeded_rng};
use crate::tensor::Tensor3;

pub const DEFAULT_SEED: u64 = 20_190_517;

pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const DIMENSION: u8 = 4;
    pub const PERTURBATION_FAILED: u8 = 5;
    pub const INCONCLUSIVE: u8 = 6;
    pub const IO: u8 = 7;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sample {
    /// `[[1,0],[0,-1]] | [[0,-1],[-1,0]]`.
    Example,
    /// `[E_2 | [[0,1],[0,0]]]`.
    W,
    /// Complex Gaussian entries.
    Random { l: usize, m: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Rank {
        tensor: PathBuf,
    },
    Approx {
        tensor: PathBuf,
        eps: f64,
        max_attempts: usize,
        out_tensor: Option<PathBuf>,
    },
    Leap {
        n: usize,
        ks: Vec<u64>,
    },
    Act {
        tensor: PathBuf,
        l: PathBuf,
        m: PathBuf,
        n: PathBuf,
    },
    Oracle {
        tensor: PathBuf,
        r: usize,
        restarts: usize,
        max_iters: usize,
    },
    Gen {
        sample: Sample,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub exit_code: u8,
    pub document: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub exit_code: u8,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::DimensionMismatch(_) | Error::InvalidShape(_) => exit::DIMENSION,
        Error::NonFinite(_) => exit::PARSE,
        Error::PerturbationFailed { .. } | Error::CertificationFailed(_) => {
            exit::PERTURBATION_FAILED
        }
        Error::Inconclusive { .. } | Error::AllSliceCombinationsSingular { .. } => {
            exit::INCONCLUSIVE
        }
        Error::InvalidArgument(msg) if msg.starts_with("malformed") => exit::PARSE,
        _ => exit::FAILURE,
    }
}

fn with_context(context: &str) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError {
        exit_code: code_for(&e),
        message: format!("{context}: {e}"),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError {
        exit_code: exit::IO,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_tensor(path: &Path) -> Result<Tensor3, CliError> {
    parse_tensor(&read(path)?).map_err(with_context(&path.display().to_string()))
}

fn load_matrix(path: &Path) -> Result<Matrix, CliError> {
    parse_matrix(&read(path)?).map_err(with_context(&path.display().to_string()))
}

fn to_document<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

pub fn sample_tensor(sample: Sample, seed: u64) -> Result<Tensor3, Error> {
    match sample {
        Sample::Example => Tensor3::from_slices(vec![
            Matrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
            Matrix::from_real_rows(&[&[0.0, -1.0], &[-1.0, 0.0]]),
        ]),
        Sample::W => Tensor3::from_slices(vec![
            Matrix::identity(2),
            Matrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
        ]),
        Sample::Random { l, m, n } => {
            if l == 0 || m == 0 || n == 0 {
                return Err(Error::InvalidShape(format!(
                    "random dims must be positive, got {l}x{m}x{n}"
                )));
            }
            let mut rng = seeded_rng(seed);
            Tensor3::from_slices((0..n).map(|_| random_matrix(&mut rng, l, m)).collect())
        }
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    let seed = config.seed;
    let tol = &config.tolerances;
    match &config.command {
        Command::Rank { tensor } => {
            let a = load_tensor(tensor)?;
            let ctx = format!("rank {}", tensor.display());
            let cert = bi_rank_check(&a, tol, seed).map_err(with_context(&ctx))?;
            let exit_code = if cert.verdict == Verdict::Inconclusive {
                exit::INCONCLUSIVE
            } else {
                exit::OK
            };
            let doc = json!({
                "command": "rank",
                "input": tensor.display().to_string(),
                "seed": seed,
                "certificate": cert,
            });
            Ok(RunOutput {
                exit_code,
                document: to_document(&doc),
            })
        }
        Command::Approx {
            tensor,
            eps,
            max_attempts,
            out_tensor,
        } => {
            if !(eps.is_finite() && *eps > 0.0) {
                return Err(CliError {
                    exit_code: exit::USAGE,
                    message: format!("--eps must be positive, got {eps}"),
                });
            }
            let a = load_tensor(tensor)?;
            let ctx = format!("approx {}", tensor.display());
            let approx = rank_n_approximate(&a, *eps, seed, *max_attempts, tol)
                .map_err(with_context(&ctx))?;
            if let Some(path) = out_tensor {
                fs::write(path, serialize_tensor(&approx.tensor)).map_err(|e| CliError {
                    exit_code: exit::IO,
                    message: format!("{}: {e}", path.display()),
                })?;
            }
            let doc = json!({
                "command": "approx",
                "input": tensor.display().to_string(),
                "seed": seed,
                "epsilon": eps,
                "max_attempts": max_attempts,
                "approximation": approx,
            });
            Ok(RunOutput {
                exit_code: exit::OK,
                document: to_document(&doc),
            })
        }
        Command::Leap { n, ks } => {
            let ctx = format!("leap n={n}");
            let family = build_leap_family(*n, seed).map_err(with_context(&ctx))?;
            let limit_cert = bi_rank_check(&family.limit, tol, seed).map_err(with_context(&ctx))?;
            let mut members = Vec::with_capacity(ks.len());
            let mut all_ok = limit_cert.verdict == Verdict::RankNotEqualMExceeds;
            for &k in ks {
                if k == 0 {
                    return Err(CliError {
                        exit_code: exit::USAGE,
                        message: "--k values must be >= 1".into(),
                    });
                }
                let member = family.member(k);
                let cert = bi_rank_check(&member, tol, seed).map_err(with_context(&ctx))?;
                all_ok &= cert.verdict == Verdict::RankEqualsM;
                members.push(json!({
                    "k": k,
                    "distance_l1": member.distance_l1(&family.limit).map_err(with_context(&ctx))?,
                    "expected_distance": *n as f64 / k as f64,
                    "verdict": cert.verdict,
                    "certificate": cert,
                }));
            }
            let doc = json!({
                "command": "leap",
                "n": n,
                "seed": seed,
                "eigenvalues": family.eigenvalues,
                "claimed_rank_limit": family.claimed_rank_limit(),
                "max_rank_value_2n": max_rank_value(2 * n),
                "certified_rank_members": family.certified_rank_members(),
                "limit_verdict": limit_cert.verdict,
                "limit_certificate": limit_cert,
                "members": members,
            });
            let exit_code = if all_ok { exit::OK } else { exit::INCONCLUSIVE };
            Ok(RunOutput {
                exit_code,
                document: to_document(&doc),
            })
        }
        Command::Act { tensor, l, m, n } => {
            let a = load_tensor(tensor)?;
            let (lm, mm, nm) = (load_matrix(l)?, load_matrix(m)?, load_matrix(n)?);
            let g =
                GlTriple::with_tolerance(lm, mm, nm, tol.sing_rel).map_err(with_context("act"))?;
            let b = act(&g, &a).map_err(with_context("act"))?;
            Ok(RunOutput {
                exit_code: exit::OK,
                document: serialize_tensor(&b),
            })
        }
        Command::Oracle {
            tensor,
            r,
            restarts,
            max_iters,
        } => {
            if *r == 0 {
                return Err(CliError {
                    exit_code: exit::USAGE,
                    message: "--r must be >= 1".into(),
                });
            }
            let a = load_tensor(tensor)?;
            let params = AlsParams {
                restarts: *restarts,
                max_iters: *max_iters,
                seed,
                ..AlsParams::default()
            };
            let report = als_fit(&a, *r, &params);
            let doc = json!({
                "command": "oracle",
                "input": tensor.display().to_string(),
                "seed": seed,
                "decision": decision_of(&report),
                "report": report,
            });
            Ok(RunOutput {
                exit_code: exit::OK,
                document: to_document(&doc),
            })
        }
        Command::Gen { sample } => {
            let t = sample_tensor(*sample, seed).map_err(with_context("gen"))?;
            Ok(RunOutput {
                exit_code: exit::OK,
                document: serialize_tensor(&t),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn config(command: Command) -> RunConfig {
        RunConfig {
            command,
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn rank_on_example_certifies_two() {
        let dir = tempfile::tempdir().unwrap();
        let text = serialize_tensor(&sample_tensor(Sample::Example, 0).unwrap());
        let p = write(dir.path(), "a.json", &text);
        let out = run(&config(Command::Rank { tensor: p })).unwrap();
        assert_eq!(out.exit_code, exit::OK);
        let doc: serde_json::Value = serde_json::from_str(&out.document).unwrap();
        assert_eq!(doc["certificate"]["verdict"], "RankEqualsM");
        assert_eq!(doc["certificate"]["m"], 2);
        assert_eq!(doc["seed"], DEFAULT_SEED);
    }

    #[test]
    fn identity_action_reserializes_byte_for_byte() {
        let dir = tempfile::tempdir().unwrap();
        let text =
            serialize_tensor(&sample_tensor(Sample::Random { l: 2, m: 3, n: 2 }, 4).unwrap());
        let t = write(dir.path(), "t.json", &text);
        let e2 = write(
            dir.path(),
            "e2.json",
            &crate::io::serialize_matrix(&Matrix::identity(2)),
        );
        let e3 = write(
            dir.path(),
            "e3.json",
            &crate::io::serialize_matrix(&Matrix::identity(3)),
        );
        let out = run(&config(Command::Act {
            tensor: t,
            l: e2.clone(),
            m: e3,
            n: e2,
        }))
        .unwrap();
        assert_eq!(out.document, text);
    }

    #[test]
    fn leap_report_has_expected_distance() {
        let out = run(&config(Command::Leap { n: 1, ks: vec![10] })).unwrap();
        assert_eq!(out.exit_code, exit::OK);
        let doc: serde_json::Value = serde_json::from_str(&out.document).unwrap();
        assert_eq!(doc["members"][0]["distance_l1"], 0.1);
        assert_eq!(doc["members"][0]["verdict"], "RankEqualsM");
        assert_eq!(doc["limit_verdict"], "RankNotEqualM_Exceeds");
        assert_eq!(doc["claimed_rank_limit"], 3);
    }

    #[test]
    fn error_codes_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write(dir.path(), "bad.json", "{\"dims\": [1, 1, 1]}");
        let err = run(&config(Command::Rank {
            tensor: bad.clone(),
        }))
        .unwrap_err();
        assert_eq!(err.exit_code, exit::PARSE);
        assert!(err.message.contains("bad.json"));

        let rect = write(
            dir.path(),
            "rect.json",
            &serialize_tensor(&Tensor3::zeros(2, 3, 2)),
        );
        assert_eq!(
            run(&config(Command::Rank { tensor: rect }))
                .unwrap_err()
                .exit_code,
            exit::DIMENSION
        );

        let missing = dir.path().join("missing.json");
        assert_eq!(
            run(&config(Command::Rank { tensor: missing }))
                .unwrap_err()
                .exit_code,
            exit::IO
        );

        let w = write(
            dir.path(),
            "w.json",
            &serialize_tensor(&sample_tensor(Sample::W, 0).unwrap()),
        );
        let strict = RunConfig {
            tolerances: Tolerances {
                gap_rel: 10.0,
                ..Tolerances::default()
            },
            ..config(Command::Approx {
                tensor: w,
                eps: 0.1,
                max_attempts: 4,
                out_tensor: None,
            })
        };
        assert_eq!(
            run(&strict).unwrap_err().exit_code,
            exit::PERTURBATION_FAILED
        );
    }

    #[test]
    fn approx_writes_certified_tensor() {
        let dir = tempfile::tempdir().unwrap();
        let w = write(
            dir.path(),
            "w.json",
            &serialize_tensor(&sample_tensor(Sample::W, 0).unwrap()),
        );
        let out_path = dir.path().join("b.json");
        let out = run(&config(Command::Approx {
            tensor: w.clone(),
            eps: 1e-6,
            max_attempts: 256,
            out_tensor: Some(out_path.clone()),
        }))
        .unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out.document).unwrap();
        assert_eq!(
            doc["approximation"]["certificate"]["verdict"],
            "RankEqualsM"
        );
        let b = parse_tensor(&fs::read_to_string(&out_path).unwrap()).unwrap();
        let a = parse_tensor(&fs::read_to_string(&w).unwrap()).unwrap();
        assert!(a.distance_l1(&b).unwrap() < 1e-6);
        let again = run(&config(Command::Rank { tensor: out_path })).unwrap();
        assert_eq!(again.exit_code, exit::OK);
    }
}
