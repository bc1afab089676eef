use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sumprod::census::{component_census, fano_connected, fano_nonempty, splitting_status, torus_fixed_count, torus_fixed_planes, CensusError};
use sumprod::identity::DegreeConstraint;
use sumprod::plane::{lambda_profile, membership, profile_audit, sharp_witness, splitting_subsets, AuditFlags, AuditVerdict, KPlane, PlaneError, PlaneJson};
use sumprod::prodrank::{
    certificate, det_cover, pfaffian_cover, rank_bounds, replay, theorem_bound, verify_decomposition, CoverConfig, Decomposition, DecompositionJson,
    RankCertificate, Target,
};
use sumprod::search::{hunt_counterexamples, hunt_split_violations, Mode, Partition, SearchSpace, SplitHunt, DEFAULT_CEILING};
use sumprod::{Exec, FieldCtx};
use sumprod_cli::io::{emit_json, emit_text, load_json, with_schema, UsageError, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};
use sumprod_cli::repro;

/// Exact computations for sums of products of linear forms.
#[derive(Parser)]
#[command(name = "sumprod", version)]
struct Cli {
    /// Worker threads for searches and sampling (1 runs sequentially).
    #[arg(long, global = true, default_value_t = default_jobs())]
    jobs: usize,
    /// Seed for every randomized step; echoed in the output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Subcommand)]
enum Cmd {
    /// Whether a plane lies in X_{r,d} (exit 1 if not).
    Member(PlaneArg),
    /// Index sets S with sum_{i in S} Y_i = 0.
    Split {
        #[command(flatten)]
        plane: PlaneArg,
        #[arg(long, default_value_t = 2)]
        lambda_max: usize,
    },
    /// Greedy lambda-profile, optionally audited at index `s`.
    Profile {
        #[command(flatten)]
        plane: PlaneArg,
        #[arg(long)]
        s: Option<usize>,
        /// Claimed value of the `lambda_{r-s} = 0` hypothesis.
        #[arg(long)]
        claim_lambda_vanishes: Option<bool>,
        /// Claimed value of the parity/size case hypothesis.
        #[arg(long)]
        claim_case: Option<bool>,
        /// Claimed value of the k bound hypothesis.
        #[arg(long)]
        claim_k_bound: Option<bool>,
    },
    /// Searches for counterexamples and splitting violations.
    #[command(subcommand)]
    Hunt(HuntCmd),
    /// Component table of F_k(X_{r,d}) with splitting status.
    Census {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Torus-fixed (coordinate) k-planes of X_{r,d}.
    Fixedplanes {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        /// Print only the count and the closed-form check.
        #[arg(long)]
        count_only: bool,
    },
    /// Product-rank bounds, decompositions and certificates.
    #[command(subcommand)]
    Rank(RankCmd),
    /// Replay a certificate file (exit 1 if a check fails).
    Cert {
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Witness planes.
    #[command(subcommand)]
    Witness(WitnessCmd),
    /// Run the full acceptance suite.
    Repro {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PlaneArg {
    /// Plane JSON file; stdin when absent or `-`.
    #[arg(long)]
    plane: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum HuntCmd {
    /// Counterexamples to the vanishing property over GF(q).
    C {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Monomial degrees, e.g. `3,3,2`.
        #[arg(long, value_delimiter = ',', required = true)]
        pattern: Vec<u32>,
        #[arg(long, default_value = "2")]
        field: String,
        /// Ring size; defaults to the sum of the pattern.
        #[arg(long)]
        nvars: Option<usize>,
        #[arg(long, conflicts_with = "trials")]
        exhaustive: bool,
        /// Random trials instead of the exhaustive search.
        #[arg(long)]
        trials: Option<u64>,
        /// Allow degree sums of d+1.
        #[arg(long)]
        relaxed: bool,
        #[arg(long)]
        no_symmetry: bool,
        #[arg(long, default_value_t = DEFAULT_CEILING)]
        ceiling: u64,
        /// Only this slice of the root branches, as `slot/count`.
        #[arg(long)]
        partition: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Member planes that split worse than their status predicts.
    Split {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "101")]
        field: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long)]
        inject_witness: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RankCmd {
    /// Apply the exclusion rule to a target or to explicit parameters.
    Bound {
        #[arg(long, required_unless_present = "r")]
        target: Option<String>,
        #[arg(long, requires_all = ["d", "k", "n"])]
        r: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Dimension of the covering family, if known.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Check a decomposition file exactly (exit 1 if it is wrong).
    Verify {
        #[arg(long)]
        decomposition: PathBuf,
    },
    /// Emit a replayable certificate.
    Cert {
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample planes through random singular points.
    Cover {
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 101)]
        prime: u32,
    },
}

#[derive(Subcommand)]
enum WitnessCmd {
    /// The non-one-split plane of X_{r,d}.
    Sharp {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value = "rational")]
        field: String,
    },
}

type Outcome = Result<i32, Box<dyn std::error::Error>>;

fn usage(e: impl std::fmt::Display) -> Box<dyn std::error::Error> {
    Box::new(UsageError::new(e.to_string()))
}

fn parse_field(s: &str) -> Result<FieldCtx, UsageError> {
    let t = s.trim();
    let res = match t {
        "Q" | "q" | "rational" | "rationals" => Ok(FieldCtx::rationals()),
        _ => match t.strip_prefix("q=").unwrap_or(t).parse::<u64>() {
            Ok(p) => FieldCtx::prime(p),
            Err(_) => FieldCtx::from_tag(t),
        },
    };
    res.map_err(|e| UsageError::new(format!("--field {s}: {e}")))
}

fn load_plane(arg: &PlaneArg) -> Result<KPlane, UsageError> {
    let j: PlaneJson = load_json(arg.plane.as_deref())?;
    KPlane::from_json(&j).map_err(|e| UsageError::new(format!("plane: {e}")))
}

fn print(schema: &str, seed: u64, value: serde_json::Value) -> Result<(), Box<dyn std::error::Error>> {
    let mut v = with_schema(schema, &value);
    v["seed"] = seed.into();
    emit_json(&v, None)?;
    Ok(())
}

fn write_out(schema: &str, seed: u64, value: &impl serde::Serialize, out: Option<&std::path::Path>) -> Result<(), Box<dyn std::error::Error>> {
    let mut v = with_schema(schema, value);
    v["seed"] = seed.into();
    emit_json(&v, out)?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let exec = Exec::from_jobs(cli.jobs.max(1));
    let seed = cli.seed;
    match cli.cmd {
        Cmd::Member(p) => {
            let l = load_plane(&p)?;
            let ok = membership(&l);
            print("sumprod.member/1", seed, json!({ "r": l.params().r, "d": l.params().d, "k": l.k(), "member": ok }))?;
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Cmd::Split { plane, lambda_max } => {
            let l = load_plane(&plane)?;
            match splitting_subsets(&l, lambda_max) {
                Ok(subsets) => {
                    let one_based: Vec<Vec<usize>> = subsets.iter().map(|s| s.iter().map(|i| i + 1).collect()).collect();
                    let min = one_based.iter().map(Vec::len).min();
                    print(
                        "sumprod.split/1",
                        seed,
                        json!({ "lambda_max": lambda_max, "subsets": one_based, "min_splitting": min, "one_split": min == Some(1) }),
                    )?;
                    Ok(EXIT_OK)
                }
                Err(PlaneError::NotMember) => {
                    print("sumprod.split/1", seed, json!({ "member": false }))?;
                    Ok(EXIT_CHECK_FAILED)
                }
                Err(e) => Err(usage(e)),
            }
        }
        Cmd::Profile {
            plane,
            s,
            claim_lambda_vanishes,
            claim_case,
            claim_k_bound,
        } => {
            let l = load_plane(&plane)?;
            let profile = match lambda_profile(&l) {
                Ok(p) => p,
                Err(PlaneError::OneSplitDetected { row }) => {
                    print("sumprod.profile/1", seed, json!({ "one_split_detected": row }))?;
                    return Ok(EXIT_OK);
                }
                Err(PlaneError::NotMember) => {
                    print("sumprod.profile/1", seed, json!({ "member": false }))?;
                    return Ok(EXIT_CHECK_FAILED);
                }
                Err(e) => return Err(usage(e)),
            };
            let ordering: Vec<usize> = profile.ordering.iter().map(|i| i + 1).collect();
            let mut out = json!({ "lambdas": profile.lambdas, "ordering": ordering });
            let mut code = EXIT_OK;
            if let Some(s) = s {
                let flags = AuditFlags {
                    lambda_vanishes: claim_lambda_vanishes,
                    case_holds: claim_case,
                    k_bound: claim_k_bound,
                };
                let audit = profile_audit(&l, s, flags).map_err(usage)?;
                if audit.verdict == AuditVerdict::InconsistentWithLemma {
                    code = EXIT_CHECK_FAILED;
                }
                out["audit"] = serde_json::to_value(audit)?;
            }
            print("sumprod.profile/1", seed, out)?;
            Ok(code)
        }
        Cmd::Hunt(HuntCmd::C {
            d,
            m,
            k,
            pattern,
            field,
            nvars,
            exhaustive: _,
            trials,
            relaxed,
            no_symmetry,
            ceiling,
            partition,
            out,
        }) => {
            let ctx = parse_field(&field)?;
            let constraint = if relaxed { DegreeConstraint::Relaxed } else { DegreeConstraint::Strict };
            let mut space = SearchSpace::new(ctx, d, m, k, pattern, constraint);
            if let Some(n) = nvars {
                space.nvars = n;
            }
            space.ceiling = ceiling;
            space.symmetry = !no_symmetry;
            if let Some(t) = trials {
                space.mode = Mode::Randomized { seed, trials: t };
            }
            if let Some(p) = partition {
                let parsed = p
                    .split_once('/')
                    .and_then(|(a, b)| Some(Partition { slot: a.parse().ok()?, count: b.parse().ok()? }))
                    .filter(|p| p.count > 0 && p.slot < p.count)
                    .ok_or_else(|| UsageError::new(format!("--partition {p}: expected slot/count")))?;
                space.partition = Some(parsed);
            }
            space.validate().map_err(usage)?;
            let report = hunt_counterexamples(&space, exec).map_err(usage)?;
            let found = !report.counterexamples.is_empty();
            write_out(&report.schema.clone(), seed, &report, out.as_deref())?;
            Ok(if found { EXIT_CHECK_FAILED } else { EXIT_OK })
        }
        Cmd::Hunt(HuntCmd::Split {
            r,
            d,
            k,
            field,
            trials,
            inject_witness,
            out,
        }) => {
            let ctx = parse_field(&field)?;
            let h = SplitHunt {
                r,
                d,
                k,
                ctx,
                trials,
                seed,
                inject_witness,
            };
            let report = hunt_split_violations(&h, exec).map_err(usage)?;
            let found = !report.violations.is_empty();
            write_out(&report.schema.clone(), seed, &report, out.as_deref())?;
            Ok(if found { EXIT_CHECK_FAILED } else { EXIT_OK })
        }
        Cmd::Census { r, d, k, format } => {
            let table = component_census(r, d, k).map_err(|e: CensusError| usage(e))?;
            match format {
                Format::Table => emit_text(&table.to_text())?,
                Format::Csv => emit_text(&table.to_csv())?,
                Format::Json => {
                    let status = splitting_status(r, d, k).map_err(usage)?;
                    print(
                        "sumprod.census/1",
                        seed,
                        json!({
                            "table": table,
                            "status": table.status_label(),
                            "splitting": status,
                            "nonempty": fano_nonempty(r, d, k),
                            "connected": fano_connected(r, d, k),
                        }),
                    )?;
                }
            }
            Ok(EXIT_OK)
        }
        Cmd::Fixedplanes { r, d, k, count_only } => {
            let planes = torus_fixed_planes(r, d, k, exec).map_err(usage)?;
            let formula = torus_fixed_count(r, d, k);
            let agrees = formula == planes.len().into();
            let mut out = json!({ "r": r, "d": d, "k": k, "count": planes.len(), "formula_count": formula.to_string(), "agrees": agrees });
            if !count_only {
                let zeros: Vec<Vec<(usize, usize)>> =
                    planes.iter().map(|p| p.zeros.iter().map(|&(i, j)| (i + 1, j + 1)).collect()).collect();
                out["planes"] = json!(zeros);
            }
            print("sumprod.fixedplanes/1", seed, out)?;
            Ok(if agrees { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Cmd::Rank(RankCmd::Bound { target, r, d, k, n, m }) => {
            if let Some(t) = target {
                let t = Target::parse(&t).map_err(usage)?;
                let rep = rank_bounds(t).map_err(usage)?;
                print("sumprod.rankbound/1", seed, serde_json::to_value(rep)?)?;
            } else {
                let (r, d, k, n) = (r.unwrap_or(0), d.unwrap_or(0), k.unwrap_or(0), n.unwrap_or(0));
                let v = theorem_bound(r, d, k, n, m).map_err(usage)?;
                print(
                    "sumprod.rankbound/1",
                    seed,
                    json!({ "r": r, "d": d, "k": k, "n": n, "m": m, "proven": v.is_proven_exclusion(), "summary": v.to_string(), "verdict": v }),
                )?;
            }
            Ok(EXIT_OK)
        }
        Cmd::Rank(RankCmd::Verify { decomposition }) => {
            let j: DecompositionJson = load_json(Some(&decomposition))?;
            let dec = Decomposition::from_json(&j).map_err(usage)?;
            let ok = verify_decomposition(&dec);
            print(
                "sumprod.verify/1",
                seed,
                json!({ "r": dec.r(), "d": dec.d(), "spans_ambient": dec.spans_ambient(), "verified": ok }),
            )?;
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Cmd::Rank(RankCmd::Cert { target, out }) => {
            let t = Target::parse(&target).map_err(usage)?;
            match certificate(t) {
                Ok(cert) => {
                    emit_json(&serde_json::to_value(&cert)?, out.as_deref())?;
                    Ok(EXIT_OK)
                }
                Err(sumprod::prodrank::RankError::CheckFailed { label, detail }) => {
                    eprintln!("certificate step {label} failed: {detail}");
                    Ok(EXIT_CHECK_FAILED)
                }
                Err(e) => Err(usage(e)),
            }
        }
        Cmd::Rank(RankCmd::Cover { target, samples, prime }) => {
            let t = Target::parse(&target).map_err(usage)?;
            let cfg = CoverConfig { prime, samples, seed };
            let w = match t {
                Target::Det3 => det_cover(3, &cfg, exec),
                Target::Det4 => det_cover(4, &cfg, exec),
                Target::Pf6 => pfaffian_cover(&cfg, exec),
                Target::Perm4 => return Err(usage("perm4 has no sampled covering family")),
            }
            .map_err(usage)?;
            let ok = w.all_pass();
            print(
                "sumprod.cover/1",
                seed,
                json!({ "target": w.target, "k": w.k, "field": w.field, "samples": w.samples.len(), "failures": w.failures(), "all_pass": ok }),
            )?;
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Cmd::Cert { cert } => {
            let c: RankCertificate = load_json(cert.as_deref())?;
            let rep = replay(&c).map_err(usage)?;
            let ok = rep.all_checks_pass();
            print(
                "sumprod.replay/1",
                seed,
                json!({ "target": c.target, "lower_bound": c.lower_bound, "checked": rep.checked(), "imported": rep.imported(), "all_pass": ok, "steps": rep.outcomes }),
            )?;
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Cmd::Witness(WitnessCmd::Sharp { r, d, field }) => {
            let ctx = parse_field(&field)?;
            let w = sharp_witness(ctx, r, d).map_err(usage)?;
            print("sumprod.plane/1", seed, serde_json::to_value(w.to_json())?)?;
            Ok(EXIT_OK)
        }
        Cmd::Repro { out } => {
            let report = repro::run(cli.jobs.max(1), seed);
            for c in &report.criteria {
                eprintln!("{}", c.line());
            }
            let ok = report.all_pass();
            emit_json(&serde_json::to_value(&report)?, out.as_deref())?;
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    };
    ExitCode::from(code as u8)
}
