//! Command-line front end. Every subcommand wraps one library operation,
//! reads the JSON file formats, and renders either a text report or the same
//! report as JSON. Exit codes: 0 the property holds or all checks pass, 1 it
//! fails (the report carries the witness), 2 usage or input error, 3 a search
//! budget was exhausted.

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use twinforge::entangle::{
    gamma_org, graph_entangled, org_entangled, pr0_check, unembeddable_oracle, TermShape,
    TupleFamily,
};
use twinforge::error::Error;
use twinforge::formula::QfFormula;
use twinforge::gem::Blueprint;
use twinforge::json as tj;
use twinforge::logic::{is_far, is_sigma_far, solve_iso_game, solve_tree_clock_game, Filtration, Winner};
use twinforge::org::{
    build_block, check_k0, check_k1, check_k2, generic_map, EdgeRule, OrderRule,
};
use twinforge::pipeline::{
    assemble, verify_hypotheses_c11, verify_solution_isomorphism, AssembleOpts,
};
use twinforge::poset::SeqTree;
use twinforge::rel::search_isomorphism;
use twinforge::report::{ClauseReport, Verdict};
use twinforge::twinship::{
    derive_from_forcing, is_strong, solves, validate_param, wellfound_transform, ValidateOpts,
};
use twinforge::words::orbit;
use twinforge::Result;

const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Parser)]
#[command(name = "twinforge", version, about = "Finite-scale twin structure workbench")]
struct Cli {
    /// Report rendering.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    Shortlex,
    Invariant,
}

impl From<OrderArg> for OrderRule {
    fn from(o: OrderArg) -> OrderRule {
        match o {
            OrderArg::Shortlex => OrderRule::Shortlex,
            OrderArg::Invariant => OrderRule::Invariant,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the parameter clauses on a parameter file.
    ValidateParam {
        param: PathBuf,
        /// Check every clause at every element, frontier included.
        #[arg(long)]
        verbatim: bool,
        /// Also demand a family member entirely at high tree levels.
        #[arg(long)]
        levels_demand: bool,
    },
    /// Derive a parameter from a forcing example file.
    DeriveForcing {
        forcing: PathBuf,
        #[arg(long, default_value_t = 1000)]
        antichain_cap: usize,
    },
    /// Does the given down-set style set solve the parameter?
    SolveCheck {
        param: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        g: Vec<usize>,
    },
    /// Is the parameter strong (no directed set solves it)?
    StrongCheck { param: PathBuf },
    /// Rebuild the parameter over the increasing-sequence tree above a root.
    WellfoundTransform {
        param: PathBuf,
        #[arg(long)]
        r: usize,
    },
    /// Class membership: base clauses.
    CheckK0 { structure: PathBuf, param: PathBuf },
    /// Class membership: word reducedness against the groupoid atlas.
    CheckK1 {
        structure: PathBuf,
        param: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Class membership: applicable-word sets match family members.
    CheckK2 {
        structure: PathBuf,
        param: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Free block over one family member, emitted as a structure file.
    BuildBlock {
        param: PathBuf,
        #[arg(long)]
        member: usize,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = OrderArg::Shortlex)]
        order: OrderArg,
    },
    /// Union of the node maps over a solving set, with the construction report.
    GenericMap {
        structure: PathBuf,
        param: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        g: Vec<usize>,
    },
    /// Trajectory of an element under a word of node maps.
    Orbit {
        structure: PathBuf,
        word: PathBuf,
        #[arg(long)]
        element: usize,
    },
    /// Entangledness of a tuple family over a structure file.
    Entangled {
        structure: PathBuf,
        /// Tuples as comma-joined ids, semicolon-separated: "0,1;2,3".
        #[arg(long)]
        tuples: String,
        /// Switch to the map-respecting check over this parameter.
        #[arg(long)]
        param: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Coloring property: every separated block family realizes every table.
    Pr0 {
        coloring: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        mu: usize,
    },
    /// Guarded-term unembeddability of one structure into another.
    Unembed {
        i: PathBuf,
        j: PathBuf,
        /// Term shapes as name:arity pairs, comma separated.
        #[arg(long, default_value = "t:1")]
        sigma: String,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Staged isomorphism game between two filtered structures.
    EfGame {
        m: PathBuf,
        n: PathBuf,
        /// Stage sizes applied to both structures as prefixes.
        #[arg(long, value_delimiter = ',', required = true)]
        stages: Vec<usize>,
        /// Rounds to survive; defaults to the stage count.
        #[arg(long)]
        zeta: Option<usize>,
        /// Run the tree-clock variant over this "lam,depth" sequence tree.
        #[arg(long)]
        tree_clock: Option<String>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Farness of two structures over a fixed witness list.
    Far {
        m1: PathBuf,
        m2: PathBuf,
        /// Formula file.
        #[arg(long)]
        phi: PathBuf,
        /// Selection size.
        #[arg(long)]
        n: usize,
        /// Tuple length.
        #[arg(long)]
        k: usize,
        /// Witness family "a,b;c,d"; repeat the flag for the sigma variant.
        #[arg(long, required = true)]
        witness: Vec<String>,
        #[arg(long, default_value_t = 1)]
        u_min: usize,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Build a twin assembly bundle from a parameter, coloring and sizes.
    Assemble {
        param: PathBuf,
        #[arg(long)]
        lam: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        d_seq: Vec<usize>,
        #[arg(long)]
        coloring: PathBuf,
        #[arg(long)]
        depth: usize,
        /// Blueprint file; identity when omitted.
        #[arg(long)]
        blueprint: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OrderArg::Invariant)]
        order: OrderArg,
        /// Block indices whose seeds form the refinement set Y.
        #[arg(long, value_delimiter = ',')]
        y_blocks: Option<Vec<usize>>,
        /// Write the bundle here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run an assembly bundle and check the construction hypotheses.
    VerifyTwin {
        assembly: PathBuf,
        /// Also verify the solution-induced partial isomorphism for this set.
        #[arg(long, value_delimiter = ',')]
        g: Option<Vec<usize>>,
    },
    /// Exhaustive isomorphism search between two structure files.
    IsoSearch {
        m1: PathBuf,
        m2: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::SearchBudgetExceeded { .. } | Error::AtlasCapExceeded { .. } => 3,
        Error::NotASolution | Error::Inconsistent { .. } => 1,
        _ => 2,
    }
}

fn budget(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("TWINFORGE_BUDGET")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(DEFAULT_BUDGET)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Value> {
    tj::parse_json(&read(path)?)
}

fn verdict_tag(v: &Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Skipped(_) => "skipped",
        Verdict::Degenerate(_) => "degenerate",
    }
}

fn report_value(rep: &ClauseReport) -> Value {
    Value::Array(
        rep.entries
            .iter()
            .map(|e| {
                let reason = match &e.verdict {
                    Verdict::Skipped(r) | Verdict::Degenerate(r) => Value::from(r.as_str()),
                    _ => Value::Null,
                };
                json!({
                    "id": e.id,
                    "verdict": verdict_tag(&e.verdict),
                    "reason": reason,
                    "detail": e.detail,
                })
            })
            .collect(),
    )
}

fn emit(format: Format, text: String, value: Value) {
    match format {
        Format::Text => println!("{text}"),
        Format::Json => print!("{}", tj::render(&value)),
    }
}

fn emit_report(format: Format, rep: &ClauseReport) {
    emit(format, format!("{rep}").trim_end().to_string(), report_value(rep));
}

fn code(ok: bool) -> u8 {
    u8::from(!ok)
}

fn parse_families(specs: &[String]) -> Result<Vec<Vec<Vec<usize>>>> {
    specs.iter().map(|s| parse_tuples(s)).collect()
}

fn parse_tuples(spec: &str) -> Result<Vec<Vec<usize>>> {
    spec.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| Error::Input(format!("bad id {x:?} in tuple list")))
                })
                .collect()
        })
        .collect()
}

fn run(cli: &Cli) -> Result<u8> {
    let fmt = cli.format;
    match &cli.cmd {
        Cmd::ValidateParam {
            param,
            verbatim,
            levels_demand,
        } => {
            let p = tj::param_from_value(&load(param)?)?;
            let rep = validate_param(
                &p,
                ValidateOpts {
                    verbatim: *verbatim,
                    levels_demand: *levels_demand,
                },
            );
            emit_report(fmt, &rep);
            Ok(code(rep.all_ok()))
        }
        Cmd::DeriveForcing {
            forcing,
            antichain_cap,
        } => {
            let m = tj::forcing_from_value(&load(forcing)?)?;
            let out = derive_from_forcing(&m, *antichain_cap)?;
            let pv = tj::param_to_value(&out.param);
            emit(
                fmt,
                format!(
                    "truncated: {}\n{}",
                    out.truncated,
                    tj::render(&pv).trim_end()
                ),
                json!({ "truncated": out.truncated, "param": pv }),
            );
            Ok(0)
        }
        Cmd::SolveCheck { param, g } => {
            let p = tj::param_from_value(&load(param)?)?;
            let set: BTreeSet<usize> = g.iter().copied().collect();
            let ok = solves(&p, &set)?;
            emit(
                fmt,
                format!("solves: {ok}"),
                json!({ "solves": ok, "g": g }),
            );
            Ok(code(ok))
        }
        Cmd::StrongCheck { param } => {
            let p = tj::param_from_value(&load(param)?)?;
            let sc = is_strong(&p);
            let witness: Vec<usize> = sc
                .witness
                .as_ref()
                .map(|w| w.iter().copied().collect())
                .unwrap_or_default();
            let text = if sc.strong {
                "strong: true".to_string()
            } else {
                format!("strong: false, solving down-set {witness:?}")
            };
            emit(
                fmt,
                text,
                json!({ "strong": sc.strong, "witness": witness }),
            );
            Ok(code(sc.strong))
        }
        Cmd::WellfoundTransform { param, r } => {
            let p = tj::param_from_value(&load(param)?)?;
            let out = wellfound_transform(&p, *r)?;
            let pv = tj::param_to_value(&out.param);
            emit(
                fmt,
                format!(
                    "sequences: {}\n{}",
                    out.sequences.len(),
                    tj::render(&pv).trim_end()
                ),
                json!({ "sequences": out.sequences.len(), "param": pv }),
            );
            Ok(0)
        }
        Cmd::CheckK0 { structure, param } => {
            let p = tj::param_from_value(&load(param)?)?;
            let j = tj::structure_from_value(&load(structure)?, Some(&p.poset))?;
            let rep = check_k0(&j, &p)?;
            emit_report(fmt, &rep);
            Ok(code(rep.all_ok()))
        }
        Cmd::CheckK1 {
            structure,
            param,
            budget: b,
        } => {
            let p = tj::param_from_value(&load(param)?)?;
            let j = tj::structure_from_value(&load(structure)?, Some(&p.poset))?;
            let out = check_k1(&j, &p, budget(*b))?;
            let (text, v) = match &out.witness {
                None => ("holds: true".to_string(), json!({ "holds": true })),
                Some((w, s)) => (
                    format!("holds: false, unreduced word {w} acts at {s}"),
                    json!({ "holds": false, "word": tj::word_to_value(w), "element": s }),
                ),
            };
            emit(fmt, text, v);
            Ok(code(out.holds))
        }
        Cmd::CheckK2 {
            structure,
            param,
            budget: b,
        } => {
            let p = tj::param_from_value(&load(param)?)?;
            let j = tj::structure_from_value(&load(structure)?, Some(&p.poset))?;
            let rep = check_k2(&j, &p, budget(*b))?;
            emit_report(fmt, &rep);
            Ok(code(rep.all_ok()))
        }
        Cmd::BuildBlock {
            param,
            member,
            depth,
            order,
        } => {
            let p = tj::param_from_value(&load(param)?)?;
            let b = build_block(&p, *member, *depth, (*order).into(), EdgeRule::Empty)?;
            let sv = tj::structure_to_value(&b.structure)?;
            emit(
                fmt,
                tj::render(&sv).trim_end().to_string(),
                json!({
                    "structure": sv,
                    "seed": b.seed,
                    "words": b.words.iter().map(tj::word_to_value).collect::<Vec<_>>(),
                }),
            );
            Ok(0)
        }
        Cmd::GenericMap {
            structure,
            param,
            g,
        } => {
            let p = tj::param_from_value(&load(param)?)?;
            let j = tj::structure_from_value(&load(structure)?, Some(&p.poset))?;
            let set: BTreeSet<usize> = g.iter().copied().collect();
            let out = generic_map(&j, &p, &set)?;
            let pairs: Vec<(usize, usize)> = out.map.pairs().collect();
            match fmt {
                Format::Text => {
                    println!("{}", format!("{}", out.report).trim_end());
                    println!("map: {pairs:?}");
                }
                Format::Json => {
                    let v = json!({
                        "report": report_value(&out.report),
                        "map": pairs,
                    });
                    print!("{}", tj::render(&v));
                }
            }
            Ok(code(out.report.all_ok()))
        }
        Cmd::Orbit {
            structure,
            word,
            element,
        } => {
            let j = tj::structure_from_value(&load(structure)?, None)?;
            let w = tj::word_from_value(&load(word)?, None)?;
            match orbit(&j.maps, &w, *element) {
                Some(traj) => {
                    emit(
                        fmt,
                        format!("trajectory: {traj:?}"),
                        json!({ "defined": true, "trajectory": traj }),
                    );
                    Ok(0)
                }
                None => {
                    emit(
                        fmt,
                        format!("word undefined at {element}"),
                        json!({ "defined": false }),
                    );
                    Ok(1)
                }
            }
        }
        Cmd::Entangled {
            structure,
            tuples,
            param,
            budget: b,
        } => {
            let fam = TupleFamily::new(parse_tuples(tuples)?)?;
            let out = match param {
                Some(pp) => {
                    let p = tj::param_from_value(&load(pp)?)?;
                    let j = tj::structure_from_value(&load(structure)?, Some(&p.poset))?;
                    org_entangled(&j, &p, &fam, budget(*b))?
                }
                None => {
                    let j = tj::structure_from_value(&load(structure)?, None)?;
                    graph_entangled(&j.rel, &fam)?
                }
            };
            let failing: Vec<(usize, usize)> = out
                .failing
                .as_ref()
                .map(|f| f.iter().copied().collect())
                .unwrap_or_default();
            let text = if out.entangled {
                format!("entangled: true ({} patterns)", out.checked)
            } else {
                format!("entangled: false, unrealized pattern {failing:?}")
            };
            emit(
                fmt,
                text,
                json!({ "entangled": out.entangled, "checked": out.checked, "failing": failing }),
            );
            Ok(code(out.entangled))
        }
        Cmd::Pr0 { coloring, n, m, mu } => {
            let c = tj::coloring_from_value(&load(coloring)?)?;
            let out = pr0_check(&c, *n, *m, *mu)?;
            let text = match &out.counterexample {
                None => "holds: true".to_string(),
                Some((blocks, table)) => {
                    format!("holds: false, blocks {blocks:?} miss table {table:?}")
                }
            };
            let v = match &out.counterexample {
                None => json!({ "holds": true }),
                Some((blocks, table)) => {
                    json!({ "holds": false, "blocks": blocks, "table": table })
                }
            };
            emit(fmt, text, v);
            Ok(code(out.holds))
        }
        Cmd::Unembed {
            i,
            j,
            sigma,
            budget: b,
        } => {
            let iv = tj::structure_from_value(&load(i)?, None)?;
            let jv = tj::structure_from_value(&load(j)?, None)?;
            let shapes: Vec<TermShape> = sigma
                .split(',')
                .map(|s| {
                    let (name, eps) = s
                        .split_once(':')
                        .ok_or_else(|| Error::Input(format!("bad term shape {s:?}")))?;
                    Ok(TermShape {
                        name: name.trim().to_string(),
                        eps: eps
                            .trim()
                            .parse()
                            .map_err(|_| Error::Input(format!("bad arity in {s:?}")))?,
                    })
                })
                .collect::<Result<_>>()?;
            let out = unembeddable_oracle(&iv.rel, &jv.rel, &shapes, &gamma_org(), budget(*b))?;
            let text = match &out.escape {
                None => "unembeddable: true".to_string(),
                Some(esc) => format!("unembeddable: false, escape {esc:?}"),
            };
            let v = json!({
                "unembeddable": out.unembeddable,
                "escape": out.escape.as_ref().map(|esc| {
                    esc.iter().map(|(t, args)| json!([t, args])).collect::<Vec<_>>()
                }),
            });
            emit(fmt, text, v);
            Ok(code(out.unembeddable))
        }
        Cmd::EfGame {
            m,
            n,
            stages,
            zeta,
            tree_clock,
            budget: b,
        } => {
            let ms = tj::structure_from_value(&load(m)?, None)?;
            let ns = tj::structure_from_value(&load(n)?, None)?;
            let mfil = Filtration::by_prefix_sizes(ms.rel, stages)?;
            let nfil = Filtration::by_prefix_sizes(ns.rel, stages)?;
            let winner = match tree_clock {
                Some(spec) => {
                    let (lam, depth) = spec
                        .split_once(',')
                        .ok_or_else(|| Error::Input("tree clock must be \"lam,depth\"".into()))?;
                    let lam: usize = lam
                        .trim()
                        .parse()
                        .map_err(|_| Error::Input("bad tree clock size".into()))?;
                    let depth: usize = depth
                        .trim()
                        .parse()
                        .map_err(|_| Error::Input("bad tree clock depth".into()))?;
                    let clock = SeqTree::new(lam, depth)?;
                    solve_tree_clock_game(&mfil, &nfil, clock.poset(), budget(*b))?
                }
                None => {
                    let sol =
                        solve_iso_game(&mfil, &nfil, zeta.unwrap_or(stages.len()), budget(*b))?;
                    sol.winner
                }
            };
            let iso = winner == Winner::Iso;
            emit(
                fmt,
                format!("winner: {}", if iso { "iso" } else { "anti" }),
                json!({ "winner": if iso { "iso" } else { "anti" } }),
            );
            Ok(code(iso))
        }
        Cmd::Far {
            m1,
            m2,
            phi,
            n,
            k,
            witness,
            u_min,
            budget: b,
        } => {
            let s1 = tj::structure_from_value(&load(m1)?, None)?;
            let s2 = tj::structure_from_value(&load(m2)?, None)?;
            let f = QfFormula::from_value(&load(phi)?)?;
            let fams = parse_families(witness)?;
            let (far, degenerate) = if fams.len() == 1 {
                let out = is_far(&s1.rel, &s2.rel, &f, *n, *k, &fams[0], *u_min)?;
                (out.far, out.degenerate)
            } else {
                let far = is_sigma_far(&s1.rel, &s2.rel, &f, *n, *k, &fams, *u_min, budget(*b))?;
                (far, None)
            };
            let text = match &degenerate {
                None => format!("far: {far}"),
                Some(why) => format!("far: {far} (degenerate: {why})"),
            };
            emit(fmt, text, json!({ "far": far, "degenerate": degenerate }));
            Ok(code(far))
        }
        Cmd::Assemble {
            param,
            lam,
            d_seq,
            coloring,
            depth,
            blueprint,
            order,
            y_blocks,
            out,
        } => {
            let p = tj::param_from_value(&load(param)?)?;
            let c = tj::coloring_from_value(&load(coloring)?)?;
            let bp = match blueprint {
                Some(path) => tj::blueprint_from_value(&load(path)?)?,
                None => Blueprint::Identity,
            };
            let opts = AssembleOpts {
                order: (*order).into(),
                edges: EdgeRule::Empty,
                y_blocks: y_blocks.as_ref().map(|ys| ys.iter().copied().collect()),
            };
            let a = assemble(&p, *lam, d_seq, &c, *depth, &bp, opts)?;
            let bundle = tj::render(&tj::assembly_to_value(&a)?);
            match out {
                Some(path) => {
                    std::fs::write(path, &bundle)
                        .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))?;
                    emit(
                        fmt,
                        format!("assembly of {} elements written to {}", a.j.len(), path.display()),
                        json!({ "elements": a.j.len(), "out": path.display().to_string() }),
                    );
                }
                None => print!("{bundle}"),
            }
            Ok(0)
        }
        Cmd::VerifyTwin { assembly, g } => {
            let a = tj::assembly_from_value(&load(assembly)?)?;
            let hyp = verify_hypotheses_c11(&a)?;
            let sol = match g {
                Some(ids) => {
                    let set: BTreeSet<usize> = ids.iter().copied().collect();
                    Some(verify_solution_isomorphism(&a, &set)?)
                }
                None => None,
            };
            let ok = hyp.all_ok() && sol.as_ref().map_or(true, ClauseReport::all_ok);
            match fmt {
                Format::Text => {
                    println!("hypotheses:");
                    println!("{}", format!("{hyp}").trim_end());
                    if let Some(s) = &sol {
                        println!("solution:");
                        println!("{}", format!("{s}").trim_end());
                    }
                }
                Format::Json => {
                    let v = json!({
                        "hypotheses": report_value(&hyp),
                        "solution": sol.as_ref().map(report_value),
                    });
                    print!("{}", tj::render(&v));
                }
            }
            Ok(code(ok))
        }
        Cmd::IsoSearch {
            m1,
            m2,
            budget: b,
        } => {
            let s1 = tj::structure_from_value(&load(m1)?, None)?;
            let s2 = tj::structure_from_value(&load(m2)?, None)?;
            match search_isomorphism(&s1.rel, &s2.rel, budget(*b))? {
                Some(map) => {
                    emit(
                        fmt,
                        format!("found: {map:?}"),
                        json!({ "found": true, "map": map }),
                    );
                    Ok(0)
                }
                None => {
                    emit(fmt, "NotFound".to_string(), json!({ "found": false }));
                    Ok(1)
                }
            }
        }
    }
}
