//! The coefficient file format shared by `build --coeffs` and the output of
//! `search`: one line per node, whitespace-separated canonical element
//! indices, `#` comments allowed.
//!
//! Per-line layouts by code family (node index first, 1-based, in order):
//!
//! * `c1`, `c2`: head nodes `i l0 l1`, fill nodes `i l0 l1 k t`;
//! * `c3`:      head nodes `i l0 l1`, diagonal nodes `i l0 l1 t`;
//! * `c4`:      every node `i l0 l1 t`;
//! * `zigzag`:  every node `i` then alpha/2 values for each diagonal;
//! * `longmds`: every node `i l0 l1`.

use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use msr_core::codes::{CodeId, Coeff, ConstructionParams, NodeParams, PairAction, RepairForm};
use msr_core::gf::{FieldElement, FieldSpec};

fn family_k(code_id: CodeId, m: usize) -> Result<usize> {
    msr_core::checker::family_k(code_id, m)
        .ok_or_else(|| anyhow!("{code_id} has no coefficient family"))
}

fn values_per_node(code_id: CodeId, m: usize, node: usize, alpha: usize) -> usize {
    match code_id {
        CodeId::C1 | CodeId::C2 => {
            if node <= m {
                2
            } else {
                4
            }
        }
        CodeId::C3 => {
            if node <= m {
                2
            } else {
                3
            }
        }
        CodeId::C4 => 3,
        CodeId::ModifiedZigzag => alpha,
        CodeId::LongMds => 2,
        CodeId::Custom => 0,
    }
}

fn node_from_values(
    code_id: CodeId,
    m: usize,
    node: usize,
    vals: &[FieldElement],
    field: &Arc<FieldSpec>,
) -> NodeParams {
    let head = node <= m;
    match code_id {
        CodeId::C1 | CodeId::C2 => {
            if head {
                NodeParams {
                    action: PairAction::Swap {
                        lambda0: vals[0].clone().into(),
                        lambda1: vals[1].clone().into(),
                    },
                    repair: RepairForm::V0,
                }
            } else {
                NodeParams {
                    action: PairAction::LowerFill {
                        lambda0: vals[0].clone().into(),
                        lambda1: vals[1].clone().into(),
                        k: vals[2].clone().into(),
                    },
                    repair: RepairForm::Combined(vals[3].clone()),
                }
            }
        }
        CodeId::C3 => {
            if head {
                NodeParams {
                    action: PairAction::Swap {
                        lambda0: vals[0].clone().into(),
                        lambda1: vals[1].clone().into(),
                    },
                    repair: RepairForm::V0,
                }
            } else {
                NodeParams {
                    action: PairAction::Diagonal {
                        lambda0: vals[0].clone().into(),
                        lambda1: vals[1].clone().into(),
                    },
                    repair: RepairForm::Combined(vals[2].clone()),
                }
            }
        }
        CodeId::C4 => NodeParams {
            action: PairAction::Swap {
                lambda0: vals[0].clone().into(),
                lambda1: vals[1].clone().into(),
            },
            repair: RepairForm::Combined(vals[2].clone()),
        },
        CodeId::ModifiedZigzag => {
            let h = vals.len() / 2;
            NodeParams {
                action: PairAction::Swap {
                    lambda0: Coeff::Diag(vals[0..h].to_vec()),
                    lambda1: Coeff::Diag(vals[h..].to_vec()),
                },
                repair: RepairForm::V0,
            }
        }
        CodeId::LongMds => {
            let (l0, l1) = (&vals[0], &vals[1]);
            if head {
                NodeParams {
                    action: PairAction::UpperFill {
                        lambda0: l0.clone().into(),
                        lambda1: l1.clone().into(),
                        k: l0.sub(l1).into(),
                    },
                    repair: RepairForm::V0,
                }
            } else if node <= 2 * m {
                NodeParams {
                    action: PairAction::LowerFill {
                        lambda0: l0.clone().into(),
                        lambda1: l1.clone().into(),
                        k: l1.sub(l0).into(),
                    },
                    repair: RepairForm::V1,
                }
            } else {
                NodeParams {
                    action: PairAction::Diagonal {
                        lambda0: l0.clone().into(),
                        lambda1: l1.clone().into(),
                    },
                    repair: RepairForm::Combined(field.one()),
                }
            }
        }
        CodeId::Custom => unreachable!("rejected by family_k"),
    }
}

/// Parse a coefficient file into construction parameters.
pub fn parse(
    code_id: CodeId,
    m: usize,
    field: &Arc<FieldSpec>,
    text: &str,
) -> Result<ConstructionParams> {
    let k = family_k(code_id, m)?;
    let alpha = 1usize << m;
    let mut nodes: Vec<Option<NodeParams>> = vec![None; k];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let node: usize = parts
            .next()
            .unwrap()
            .parse()
            .with_context(|| format!("line {}: bad node index", lineno + 1))?;
        if node == 0 || node > k {
            bail!("line {}: node index {} out of 1..={}", lineno + 1, node, k);
        }
        let expect = values_per_node(code_id, m, node, alpha);
        let vals: Vec<FieldElement> = parts
            .map(|v| -> Result<FieldElement> {
                let idx: u32 = v
                    .parse()
                    .with_context(|| format!("line {}: bad value `{v}`", lineno + 1))?;
                Ok(field.element(idx)?)
            })
            .collect::<Result<_>>()?;
        if vals.len() != expect {
            bail!(
                "line {}: node {node} of {code_id} needs {expect} values, got {}",
                lineno + 1,
                vals.len()
            );
        }
        if nodes[node - 1].is_some() {
            bail!("line {}: node {node} given twice", lineno + 1);
        }
        nodes[node - 1] = Some(node_from_values(code_id, m, node, &vals, field));
    }
    let nodes: Vec<NodeParams> = nodes
        .into_iter()
        .enumerate()
        .map(|(idx, n)| n.ok_or_else(|| anyhow!("missing coefficients for node {}", idx + 1)))
        .collect::<Result<_>>()?;
    Ok(ConstructionParams {
        m,
        field: Arc::clone(field),
        nodes,
    })
}

fn coeff_values(c: &Coeff) -> Vec<u16> {
    match c {
        Coeff::Scalar(v) => vec![v.index()],
        Coeff::Diag(vs) => vs.iter().map(|v| v.index()).collect(),
    }
}

/// Render parameters back into coefficient-file lines.
pub fn render(code_id: CodeId, params: &ConstructionParams) -> String {
    let mut out = String::new();
    for (idx, node) in params.nodes.iter().enumerate() {
        let mut vals: Vec<u16> = Vec::new();
        match &node.action {
            PairAction::Diagonal { lambda0, lambda1 } | PairAction::Swap { lambda0, lambda1 } => {
                vals.extend(coeff_values(lambda0));
                vals.extend(coeff_values(lambda1));
            }
            PairAction::LowerFill {
                lambda0,
                lambda1,
                k,
            }
            | PairAction::UpperFill {
                lambda0,
                lambda1,
                k,
            }
            | PairAction::SwapFill {
                lambda0,
                lambda1,
                k,
            } => {
                vals.extend(coeff_values(lambda0));
                vals.extend(coeff_values(lambda1));
                // derived fills are not part of the line format
                if !matches!(code_id, CodeId::LongMds) {
                    vals.extend(coeff_values(k));
                }
            }
        }
        if let RepairForm::Combined(t) = &node.repair {
            if !matches!(code_id, CodeId::LongMds) {
                vals.push(t.index());
            }
        }
        let rendered: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("{} {}\n", idx + 1, rendered.join(" ")));
    }
    out
}
