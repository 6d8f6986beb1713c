//! The generic construction engine for (k+2, k) MSR codes with node capacity
//! alpha = 2^m, plus the concrete code families and their serialization.
//!
//! A code is described per node by how its coding matrix acts on the axis
//! pair (V_{a,0}, V_{a,1}) of the standard basis partition and by the shape
//! of its repair matrix. The concrete families fix coefficient tables over a
//! primitive element of the field.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::gf::{FieldElement, FieldError, FieldSpec};
use crate::linalg::Matrix;
use crate::partition::{axis_of, selector_matrix, standard_partition, Partition, PartitionError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("m = {0} out of supported range 1..=6")]
    MOutOfRange(usize),
    #[error("{code} requires {requirement}, got {field}")]
    FieldConstraint {
        code: CodeId,
        requirement: String,
        field: String,
    },
    #[error("coefficient block of node {node}, pair {pair} is singular")]
    SingularBlock { node: usize, pair: usize },
    #[error(
        "axis {axis} carries {count} distinct repair-matrix forms; at most three are possible"
    )]
    RepairFormBound { axis: usize, count: usize },
    #[error("nodes {i} and {j} have identical repair matrices; construction failure")]
    DuplicateRepairMatrix { i: usize, j: usize },
    #[error("expected {expected} per-node coefficient entries, got {got}")]
    CoefficientCount { expected: usize, got: usize },
    #[error("diagonal coefficient vector must have alpha/2 = {expected} entries, got {got}")]
    DiagonalLength { expected: usize, got: usize },
    #[error("coefficient belongs to a different field")]
    CoefficientField,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("spec parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Which construction a code came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeId {
    C1,
    C2,
    C3,
    C4,
    ModifiedZigzag,
    LongMds,
    Custom,
}

impl CodeId {
    pub fn as_str(&self) -> &'static str {
        match self {
            CodeId::C1 => "c1",
            CodeId::C2 => "c2",
            CodeId::C3 => "c3",
            CodeId::C4 => "c4",
            CodeId::ModifiedZigzag => "zigzag",
            CodeId::LongMds => "longmds",
            CodeId::Custom => "custom",
        }
    }

    pub fn from_str_id(s: &str) -> Option<CodeId> {
        Some(match s {
            "c1" => CodeId::C1,
            "c2" => CodeId::C2,
            "c3" => CodeId::C3,
            "c4" => CodeId::C4,
            "zigzag" => CodeId::ModifiedZigzag,
            "longmds" => CodeId::LongMds,
            "custom" => CodeId::Custom,
            _ => return None,
        })
    }

    pub fn as_byte(&self) -> u8 {
        match self {
            CodeId::C1 => 1,
            CodeId::C2 => 2,
            CodeId::C3 => 3,
            CodeId::C4 => 4,
            CodeId::ModifiedZigzag => 5,
            CodeId::LongMds => 6,
            CodeId::Custom => 7,
        }
    }

    pub fn from_byte(b: u8) -> Option<CodeId> {
        Some(match b {
            1 => CodeId::C1,
            2 => CodeId::C2,
            3 => CodeId::C3,
            4 => CodeId::C4,
            5 => CodeId::ModifiedZigzag,
            6 => CodeId::LongMds,
            7 => CodeId::Custom,
            _ => return None,
        })
    }
}

impl fmt::Display for CodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four invertible 2x2 block patterns an invariant basis pair can show:
/// I = diagonal, II = antidiagonal, III = lower triangular with fill on the
/// lower-left, IV = antidiagonal with fill on the lower-right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairType {
    I,
    II,
    III,
    IV,
}

/// A scalar coefficient, or one value per basis pair of the node's axis
/// (an alpha/2 x alpha/2 diagonal matrix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coeff {
    Scalar(FieldElement),
    Diag(Vec<FieldElement>),
}

impl Coeff {
    fn resolve(&self, h: usize) -> Result<Vec<FieldElement>, CodeError> {
        match self {
            Coeff::Scalar(v) => Ok(vec![v.clone(); h]),
            Coeff::Diag(vs) => {
                if vs.len() != h {
                    return Err(CodeError::DiagonalLength {
                        expected: h,
                        got: vs.len(),
                    });
                }
                Ok(vs.clone())
            }
        }
    }

    pub fn as_scalar(&self) -> Option<&FieldElement> {
        match self {
            Coeff::Scalar(v) => Some(v),
            Coeff::Diag(_) => None,
        }
    }
}

impl From<FieldElement> for Coeff {
    fn from(v: FieldElement) -> Self {
        Coeff::Scalar(v)
    }
}

/// Action of a node's coding matrix on its axis pair (V_{a,0}, V_{a,1}).
///
/// Writing the action as (V0; V1) -> (a V0 + b V1; c V0 + d V1), the
/// variants pin the nonzero slots:
///
/// * `Diagonal`:   a = lambda0, d = lambda1 (type I);
/// * `Swap`:       b = lambda1, c = lambda0 (type II);
/// * `LowerFill`:  a = lambda0, d = lambda1, c = k (type III);
/// * `UpperFill`:  a = lambda0, d = lambda1, b = k (type III with the
///   pair order interchanged);
/// * `SwapFill`:   b = lambda1, c = lambda0, d = k (type IV).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairAction {
    Diagonal {
        lambda0: Coeff,
        lambda1: Coeff,
    },
    Swap {
        lambda0: Coeff,
        lambda1: Coeff,
    },
    LowerFill {
        lambda0: Coeff,
        lambda1: Coeff,
        k: Coeff,
    },
    UpperFill {
        lambda0: Coeff,
        lambda1: Coeff,
        k: Coeff,
    },
    SwapFill {
        lambda0: Coeff,
        lambda1: Coeff,
        k: Coeff,
    },
}

impl PairAction {
    pub fn pair_type(&self) -> PairType {
        match self {
            PairAction::Diagonal { .. } => PairType::I,
            PairAction::Swap { .. } => PairType::II,
            PairAction::LowerFill { .. } | PairAction::UpperFill { .. } => PairType::III,
            PairAction::SwapFill { .. } => PairType::IV,
        }
    }

    pub fn lambda0(&self) -> &Coeff {
        match self {
            PairAction::Diagonal { lambda0, .. }
            | PairAction::Swap { lambda0, .. }
            | PairAction::LowerFill { lambda0, .. }
            | PairAction::UpperFill { lambda0, .. }
            | PairAction::SwapFill { lambda0, .. } => lambda0,
        }
    }

    pub fn lambda1(&self) -> &Coeff {
        match self {
            PairAction::Diagonal { lambda1, .. }
            | PairAction::Swap { lambda1, .. }
            | PairAction::LowerFill { lambda1, .. }
            | PairAction::UpperFill { lambda1, .. }
            | PairAction::SwapFill { lambda1, .. } => lambda1,
        }
    }

    pub fn k_coeff(&self) -> Option<&Coeff> {
        match self {
            PairAction::LowerFill { k, .. }
            | PairAction::UpperFill { k, .. }
            | PairAction::SwapFill { k, .. } => Some(k),
            _ => None,
        }
    }

    /// The (a, b, c, d) block slots, resolved to one coefficient per pair.
    fn slots(&self, h: usize) -> Result<[Option<Vec<FieldElement>>; 4], CodeError> {
        Ok(match self {
            PairAction::Diagonal { lambda0, lambda1 } => [
                Some(lambda0.resolve(h)?),
                None,
                None,
                Some(lambda1.resolve(h)?),
            ],
            PairAction::Swap { lambda0, lambda1 } => [
                None,
                Some(lambda1.resolve(h)?),
                Some(lambda0.resolve(h)?),
                None,
            ],
            PairAction::LowerFill {
                lambda0,
                lambda1,
                k,
            } => [
                Some(lambda0.resolve(h)?),
                None,
                Some(k.resolve(h)?),
                Some(lambda1.resolve(h)?),
            ],
            PairAction::UpperFill {
                lambda0,
                lambda1,
                k,
            } => [
                Some(lambda0.resolve(h)?),
                Some(k.resolve(h)?),
                None,
                Some(lambda1.resolve(h)?),
            ],
            PairAction::SwapFill {
                lambda0,
                lambda1,
                k,
            } => [
                None,
                Some(lambda1.resolve(h)?),
                Some(lambda0.resolve(h)?),
                Some(k.resolve(h)?),
            ],
        })
    }
}

/// Shape of a node's repair matrix: V_{a,0}, V_{a,1}, or V_{a,0} + t V_{a,1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepairForm {
    V0,
    V1,
    Combined(FieldElement),
}

impl RepairForm {
    /// The t coefficient when the form belongs to the V0 + t V1 family.
    pub fn t_coefficient(&self, field: &Arc<FieldSpec>) -> Option<FieldElement> {
        match self {
            RepairForm::V0 => Some(field.zero()),
            RepairForm::V1 => None,
            RepairForm::Combined(t) => Some(t.clone()),
        }
    }
}

/// Per-node construction data: the typed block action plus the repair shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeParams {
    pub action: PairAction,
    pub repair: RepairForm,
}

/// Everything the generic construction needs: m, the field, and one
/// [`NodeParams`] per systematic node (node i uses axis ((i-1) mod m) + 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionParams {
    pub m: usize,
    pub field: Arc<FieldSpec>,
    pub nodes: Vec<NodeParams>,
}

impl ConstructionParams {
    pub fn k(&self) -> usize {
        self.nodes.len()
    }

    pub fn alpha(&self) -> usize {
        1 << self.m
    }
}

/// A fully materialized (k+2, k) code: coding matrices, repair matrices,
/// interference-cancellation maps and per-node property flags.
///
/// Codes produced by the concrete builders additionally have pairwise
/// distinct repair matrices; `build_generic` keeps degenerate inputs
/// buildable so the checker can exhibit their failures.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    code_id: CodeId,
    m: usize,
    field: Arc<FieldSpec>,
    coding: Vec<Matrix>,
    repair: Vec<Matrix>,
    /// cancel[i][j] = M with S_{i+1} A_{j+1} = M S_{i+1}, when one exists.
    cancel: Vec<Vec<Option<Matrix>>>,
    access_optimal: Vec<bool>,
    update_optimal: Vec<bool>,
}

impl CodeSpec {
    pub fn code_id(&self) -> CodeId {
        self.code_id
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn k(&self) -> usize {
        self.coding.len()
    }

    pub fn n(&self) -> usize {
        self.k() + 2
    }

    /// Helper count during single-node repair.
    pub fn d(&self) -> usize {
        self.n() - 1
    }

    pub fn alpha(&self) -> usize {
        1 << self.m
    }

    /// Per-helper repair download, beta = alpha / 2.
    pub fn beta(&self) -> usize {
        self.alpha() / 2
    }

    /// Total repair download per stripe: (k + 1) * alpha / 2 = d * beta.
    pub fn repair_bandwidth(&self) -> usize {
        (self.k() + 1) * self.beta()
    }

    /// Coding matrix A_i, node index 1-based.
    pub fn coding_matrix(&self, i: usize) -> &Matrix {
        assert!(i >= 1 && i <= self.k(), "node index out of range");
        &self.coding[i - 1]
    }

    /// Repair matrix S_i, node index 1-based.
    pub fn repair_matrix(&self, i: usize) -> &Matrix {
        assert!(i >= 1 && i <= self.k(), "node index out of range");
        &self.repair[i - 1]
    }

    /// Cancellation map M with S_i A_j = M S_i, for systematic i != j.
    pub fn cancellation(&self, i: usize, j: usize) -> Option<&Matrix> {
        assert!(i != j && i >= 1 && i <= self.k() && j >= 1 && j <= self.k());
        self.cancel[i - 1][j - 1].as_ref()
    }

    pub fn access_optimal(&self, i: usize) -> bool {
        self.access_optimal[i - 1]
    }

    pub fn update_optimal(&self, i: usize) -> bool {
        self.update_optimal[i - 1]
    }

    pub fn access_flags(&self) -> &[bool] {
        &self.access_optimal
    }

    pub fn update_flags(&self) -> &[bool] {
        &self.update_optimal
    }

    pub fn partition(&self) -> Partition {
        standard_partition(self.m).expect("m validated at construction")
    }

    fn distinct_repair_check(&self) -> Result<(), CodeError> {
        for i in 0..self.repair.len() {
            for j in i + 1..self.repair.len() {
                if self.repair[i] == self.repair[j] {
                    return Err(CodeError::DuplicateRepairMatrix { i: i + 1, j: j + 1 });
                }
            }
        }
        Ok(())
    }
}

fn compute_cancellation(s: &Matrix, sa: &Matrix) -> Option<Matrix> {
    let pivots = s.pivot_columns();
    if pivots.len() != s.rows() {
        return None;
    }
    let base = s.select_cols(&pivots).inverse().ok()?;
    let m = sa.select_cols(&pivots).mat_mul(&base);
    if m.mat_mul(s) == *sa {
        Some(m)
    } else {
        None
    }
}

fn repair_matrix_for(
    field: &Arc<FieldSpec>,
    partition: &Partition,
    axis: usize,
    form: &RepairForm,
) -> Matrix {
    let alpha = partition.alpha();
    let v0 = partition.set(axis, 0);
    let v1 = partition.set(axis, 1);
    match form {
        RepairForm::V0 => selector_matrix(field, alpha, v0, None),
        RepairForm::V1 => selector_matrix(field, alpha, v1, None),
        RepairForm::Combined(t) => {
            let scaled: Vec<FieldElement> = vec![t.clone(); v1.len()];
            selector_matrix(field, alpha, v0, None).add(&selector_matrix(
                field,
                alpha,
                v1,
                Some(&scaled),
            ))
        }
    }
}

/// Realize a code from construction parameters.
///
/// Fails on singular per-pair blocks and on more than three distinct
/// repair-matrix forms sharing one axis. Duplicate repair matrices are
/// allowed here; the checker reports them as repair failures.
pub fn build_generic(params: &ConstructionParams) -> Result<CodeSpec, CodeError> {
    build_with_id(CodeId::Custom, params)
}

/// Materialize one node's coding and repair matrices.
pub(crate) fn realize_node(
    field: &Arc<FieldSpec>,
    partition: &Partition,
    node_index: usize,
    node: &NodeParams,
) -> Result<(Matrix, Matrix), CodeError> {
    let m = partition.m();
    let alpha = partition.alpha();
    let h = alpha / 2;
    let axis = axis_of(node_index, m);
    let v0 = partition.set(axis, 0);
    let v1 = partition.set(axis, 1);
    let [a, b, c, d] = node.action.slots(h)?;
    for coeffs in [&a, &b, &c, &d].into_iter().flatten() {
        if coeffs.iter().any(|x| x.field().as_ref() != field.as_ref()) {
            return Err(CodeError::CoefficientField);
        }
    }
    let zero = field.zero();
    let get = |slot: &Option<Vec<FieldElement>>, r: usize| -> FieldElement {
        slot.as_ref().map_or_else(|| zero.clone(), |v| v[r].clone())
    };
    let mut mat = Matrix::zeros(field, alpha, alpha);
    for r in 0..h {
        let (ar, br, cr, dr) = (get(&a, r), get(&b, r), get(&c, r), get(&d, r));
        let det = ar.mul(&dr).sub(&br.mul(&cr));
        if det.is_zero() {
            return Err(CodeError::SingularBlock {
                node: node_index,
                pair: r,
            });
        }
        let (u, w) = (v0[r], v1[r]);
        mat.set(u, u, ar);
        mat.set(u, w, br);
        mat.set(w, u, cr);
        mat.set(w, w, dr);
    }
    if let RepairForm::Combined(t) = &node.repair {
        if t.field().as_ref() != field.as_ref() {
            return Err(CodeError::CoefficientField);
        }
    }
    let s = repair_matrix_for(field, partition, axis, &node.repair);
    Ok((mat, s))
}

fn build_with_id(code_id: CodeId, params: &ConstructionParams) -> Result<CodeSpec, CodeError> {
    let m = params.m;
    if m == 0 || m > 6 {
        return Err(CodeError::MOutOfRange(m));
    }
    let partition = standard_partition(m)?;
    let field = &params.field;
    let k = params.nodes.len();

    let mut coding = Vec::with_capacity(k);
    let mut repair = Vec::with_capacity(k);
    for (idx, node) in params.nodes.iter().enumerate() {
        let (a, s) = realize_node(field, &partition, idx + 1, node)?;
        coding.push(a);
        repair.push(s);
    }

    // at most three distinct repair forms may share an axis
    for axis in 1..=m {
        let mut forms: Vec<&Matrix> = Vec::new();
        for (idx, s) in repair.iter().enumerate() {
            if axis_of(idx + 1, m) != axis {
                continue;
            }
            if !forms.contains(&s) {
                forms.push(s);
            }
        }
        if forms.len() > 3 {
            return Err(CodeError::RepairFormBound {
                axis,
                count: forms.len(),
            });
        }
    }

    let mut cancel = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let sa = repair[i].mat_mul(&coding[j]);
            cancel[i][j] = compute_cancellation(&repair[i], &sa);
        }
    }

    let access_optimal = repair.iter().map(|s| s.rows_are_unit_basis()).collect();
    let update_optimal = coding
        .iter()
        .map(|a| a.cols_have_single_nonzero())
        .collect();

    Ok(CodeSpec {
        code_id,
        m,
        field: Arc::clone(field),
        coding,
        repair,
        cancel,
        access_optimal,
        update_optimal,
    })
}

fn require_field(
    code: CodeId,
    field: &Arc<FieldSpec>,
    min_q: u32,
    char2: Option<bool>,
) -> Result<(), CodeError> {
    let ok_char = match char2 {
        Some(true) => field.characteristic() == 2,
        Some(false) => field.characteristic() != 2,
        None => true,
    };
    if !ok_char || (field.order() as u32) < min_q {
        let requirement = match char2 {
            Some(true) => format!("characteristic 2 and q >= {min_q}"),
            Some(false) => format!("odd characteristic and q >= {min_q}"),
            None => format!("q >= {min_q}"),
        };
        return Err(CodeError::FieldConstraint {
            code,
            requirement,
            field: field.to_string(),
        });
    }
    Ok(())
}

/// Coefficient table of the first family: k = 3m nodes over a field of odd
/// characteristic with q >= 2m + 1.
pub fn c1_params(m: usize, field: &Arc<FieldSpec>) -> Result<ConstructionParams, CodeError> {
    if m == 0 || m > 6 {
        return Err(CodeError::MOutOfRange(m));
    }
    require_field(CodeId::C1, field, 2 * m as u32 + 1, Some(false))?;
    let g = field.primitive_element();
    let one = field.one();
    let two = one.add(&one);
    let mut nodes = Vec::with_capacity(3 * m);
    for i in 1..=m {
        let gi = g.pow(i as i64).expect("positive power");
        nodes.push(NodeParams {
            action: PairAction::Swap {
                lambda0: gi.clone().into(),
                lambda1: gi.into(),
            },
            repair: RepairForm::V0,
        });
    }
    for j in 1..=m {
        let gj = g.pow(j as i64).expect("positive power");
        nodes.push(NodeParams {
            action: PairAction::LowerFill {
                lambda0: gj.clone().into(),
                lambda1: gj.neg().into(),
                k: two.mul(&gj).neg().into(),
            },
            repair: RepairForm::Combined(one.neg()),
        });
    }
    for j in 1..=m {
        let gj = g.pow(j as i64).expect("positive power");
        nodes.push(NodeParams {
            action: PairAction::LowerFill {
                lambda0: gj.neg().into(),
                lambda1: gj.clone().into(),
                k: two.mul(&gj).neg().into(),
            },
            repair: RepairForm::Combined(one.clone()),
        });
    }
    Ok(ConstructionParams {
        m,
        field: Arc::clone(field),
        nodes,
    })
}

/// Coefficient table of the second family: k = 2m nodes over characteristic 2
/// with q >= m + 1.
pub fn c2_params(m: usize, field: &Arc<FieldSpec>) -> Result<ConstructionParams, CodeError> {
    if m == 0 || m > 6 {
        return Err(CodeError::MOutOfRange(m));
    }
    require_field(CodeId::C2, field, m as u32 + 1, Some(true))?;
    let g = field.primitive_element();
    let one = field.one();
    let mut nodes = Vec::with_capacity(2 * m);
    for i in 1..=m {
        let gi = g.pow(i as i64).expect("positive power");
        nodes.push(NodeParams {
            action: PairAction::Swap {
                lambda0: gi.clone().into(),
                lambda1: gi.into(),
            },
            repair: RepairForm::V0,
        });
    }
    for j in 1..=m {
        let gj = g.pow(j as i64).expect("positive power");
        nodes.push(NodeParams {
            action: PairAction::LowerFill {
                lambda0: gj.clone().into(),
                lambda1: gj.into(),
                k: one.clone().into(),
            },
            repair: RepairForm::Combined(one.clone()),
        });
    }
    Ok(ConstructionParams {
        m,
        field: Arc::clone(field),
        nodes,
    })
}

/// Coefficient table of the third family: k = 2m nodes over any field with
/// q >= 2m + 1; the last m nodes are diagonal.
pub fn c3_params(m: usize, field: &Arc<FieldSpec>) -> Result<ConstructionParams, CodeError> {
    if m == 0 || m > 6 {
        return Err(CodeError::MOutOfRange(m));
    }
    require_field(CodeId::C3, field, 2 * m as u32 + 1, None)?;
    let g = field.primitive_element();
    let one = field.one();
    let half_q = field.order() as i64 / 2;
    let mut nodes = Vec::with_capacity(2 * m);
    for i in 1..=m {
        let gi = g.pow(i as i64).expect("positive power");
        nodes.push(NodeParams {
            action: PairAction::Swap {
                lambda0: gi.clone().into(),
                lambda1: gi.into(),
            },
            repair: RepairForm::V0,
        });
    }
    for j in 1..=m {
        let gj = g.pow(j as i64).expect("positive power");
        let shifted = g.pow(half_q + j as i64).expect("positive power");
        nodes.push(NodeParams {
            action: PairAction::Diagonal {
                lambda0: gj.into(),
                lambda1: shifted.into(),
            },
            repair: RepairForm::Combined(one.clone()),
        });
    }
    Ok(ConstructionParams {
        m,
        field: Arc::clone(field),
        nodes,
    })
}

/// Coefficient table of the fourth family: k = 2m nodes, all antidiagonal,
/// over characteristic 2 with q >= m + 1.
pub fn c4_params(m: usize, field: &Arc<FieldSpec>) -> Result<ConstructionParams, CodeError> {
    if m == 0 || m > 6 {
        return Err(CodeError::MOutOfRange(m));
    }
    require_field(CodeId::C4, field, m as u32 + 1, Some(true))?;
    let g = field.primitive_element();
    let one = field.one();
    let mut nodes = Vec::with_capacity(2 * m);
    for i in 1..=m {
        nodes.push(NodeParams {
            action: PairAction::Swap {
                lambda0: g.pow(i as i64).expect("positive power").into(),
                lambda1: g.pow(i as i64 + 2).expect("positive power").into(),
            },
            repair: RepairForm::Combined(one.clone()),
        });
    }
    for j in 1..=m {
        let gj1 = g.pow(j as i64 + 1).expect("positive power");
        nodes.push(NodeParams {
            action: PairAction::Swap {
                lambda0: gj1.clone().into(),
                lambda1: gj1.into(),
            },
            repair: RepairForm::Combined(g.clone()),
        });
    }
    Ok(ConstructionParams {
        m,
        field: Arc::clone(field),
        nodes,
    })
}

/// Build under a specific code id with the full structural validation the
/// concrete builders promise (distinct repair matrices included).
pub fn build_with_params(
    code_id: CodeId,
    params: &ConstructionParams,
) -> Result<CodeSpec, CodeError> {
    let code = build_with_id(code_id, params)?;
    code.distinct_repair_check()?;
    Ok(code)
}

fn build_concrete(code_id: CodeId, params: &ConstructionParams) -> Result<CodeSpec, CodeError> {
    build_with_params(code_id, params)
}

pub fn build_c1(m: usize, field: &Arc<FieldSpec>) -> Result<CodeSpec, CodeError> {
    build_concrete(CodeId::C1, &c1_params(m, field)?)
}

pub fn build_c2(m: usize, field: &Arc<FieldSpec>) -> Result<CodeSpec, CodeError> {
    build_concrete(CodeId::C2, &c2_params(m, field)?)
}

pub fn build_c3(m: usize, field: &Arc<FieldSpec>) -> Result<CodeSpec, CodeError> {
    build_concrete(CodeId::C3, &c3_params(m, field)?)
}

pub fn build_c4(m: usize, field: &Arc<FieldSpec>) -> Result<CodeSpec, CodeError> {
    build_concrete(CodeId::C4, &c4_params(m, field)?)
}

/// Per-node diagonal coefficients for the modified zigzag code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZigzagCoeffs {
    pub lambda0: Vec<FieldElement>,
    pub lambda1: Vec<FieldElement>,
}

/// Build the k = m code whose nodes all act by an antidiagonal swap with
/// per-pair diagonal coefficients; repair matrices are the V_{i,0} sets.
/// Validity of the supplied coefficients is the caller's concern (run the
/// checker).
pub fn build_modified_zigzag(
    m: usize,
    field: &Arc<FieldSpec>,
    coeffs: &[ZigzagCoeffs],
) -> Result<CodeSpec, CodeError> {
    if m == 0 || m > 6 {
        return Err(CodeError::MOutOfRange(m));
    }
    if coeffs.len() != m {
        return Err(CodeError::CoefficientCount {
            expected: m,
            got: coeffs.len(),
        });
    }
    let nodes = coeffs
        .iter()
        .map(|c| NodeParams {
            action: PairAction::Swap {
                lambda0: Coeff::Diag(c.lambda0.clone()),
                lambda1: Coeff::Diag(c.lambda1.clone()),
            },
            repair: RepairForm::V0,
        })
        .collect();
    let params = ConstructionParams {
        m,
        field: Arc::clone(field),
        nodes,
    };
    build_concrete(CodeId::ModifiedZigzag, &params)
}

/// Build the k = 3m long MDS code from a table of 3m lambda pairs.
///
/// Fill coefficients derive from the lambdas: k_j = lambda_{j,0} -
/// lambda_{j,1} and k_{j+m} = lambda_{j+m,1} - lambda_{j+m,0} for
/// 1 <= j <= m. The first m nodes fill above the diagonal, the next m below,
/// and the last m are diagonal; repair forms are V0, V1, and V0 + V1
/// respectively.
pub fn build_long_mds(
    m: usize,
    field: &Arc<FieldSpec>,
    lambda: &[(FieldElement, FieldElement)],
) -> Result<CodeSpec, CodeError> {
    if m == 0 || m > 6 {
        return Err(CodeError::MOutOfRange(m));
    }
    if lambda.len() != 3 * m {
        return Err(CodeError::CoefficientCount {
            expected: 3 * m,
            got: lambda.len(),
        });
    }
    let one = field.one();
    let mut nodes = Vec::with_capacity(3 * m);
    for (idx, (l0, l1)) in lambda.iter().enumerate() {
        let node_index = idx + 1;
        let node = if node_index <= m {
            NodeParams {
                action: PairAction::UpperFill {
                    lambda0: l0.clone().into(),
                    lambda1: l1.clone().into(),
                    k: l0.sub(l1).into(),
                },
                repair: RepairForm::V0,
            }
        } else if node_index <= 2 * m {
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
                repair: RepairForm::Combined(one.clone()),
            }
        };
        nodes.push(node);
    }
    let params = ConstructionParams {
        m,
        field: Arc::clone(field),
        nodes,
    };
    build_concrete(CodeId::LongMds, &params)
}

/// Number of systematic nodes in each construction family, None for custom
/// codes.
pub fn family_k(code_id: CodeId, m: usize) -> Option<usize> {
    Some(match code_id {
        CodeId::C1 | CodeId::LongMds => 3 * m,
        CodeId::C2 | CodeId::C3 | CodeId::C4 => 2 * m,
        CodeId::ModifiedZigzag => m,
        CodeId::Custom => return None,
    })
}

/// One row of the property-count comparison: how many systematic nodes have
/// the access / update / both properties, and the field size used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table1Row {
    pub code_id: CodeId,
    pub m: usize,
    pub k: usize,
    pub k_access: usize,
    pub k_update: usize,
    pub k_both: usize,
    pub q: u16,
}

/// Property counts per code, computed from the per-node structural flags.
pub fn table1_report(codes: &[CodeSpec]) -> Vec<Table1Row> {
    codes
        .iter()
        .map(|c| {
            let both = c
                .access_flags()
                .iter()
                .zip(c.update_flags())
                .filter(|(a, u)| **a && **u)
                .count();
            Table1Row {
                code_id: c.code_id(),
                m: c.m(),
                k: c.k(),
                k_access: c.access_flags().iter().filter(|f| **f).count(),
                k_update: c.update_flags().iter().filter(|f| **f).count(),
                k_both: both,
                q: c.field().order(),
            }
        })
        .collect()
}

impl fmt::Display for Table1Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<8} m={} k={} k_A={} k_U={} k_A&U={} q={}",
            self.code_id.to_string(),
            self.m,
            self.k,
            self.k_access,
            self.k_update,
            self.k_both,
            self.q
        )
    }
}

// ---- text serialization ----

impl CodeSpec {
    /// Canonical text form: a header of key-value lines followed by the A
    /// and S matrices as integer grids in canonical residue encoding.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("msr-code v1\n");
        out.push_str(&format!("code_id: {}\n", self.code_id));
        out.push_str(&format!("m: {}\n", self.m));
        out.push_str(&format!("p: {}\n", self.field.characteristic()));
        out.push_str(&format!("e: {}\n", self.field.degree()));
        let modulus: Vec<String> = self.field.modulus().iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("modulus: {}\n", modulus.join(" ")));
        out.push_str(&format!("k: {}\n", self.k()));
        for (idx, mat) in self.coding.iter().enumerate() {
            out.push_str(&format!("A {}\n", idx + 1));
            push_matrix(&mut out, mat);
        }
        for (idx, mat) in self.repair.iter().enumerate() {
            out.push_str(&format!("S {}\n", idx + 1));
            push_matrix(&mut out, mat);
        }
        out
    }

    /// Parse the canonical text form. Flags and cancellation maps are
    /// recomputed; the matrices are taken as-is.
    pub fn from_text(text: &str) -> Result<CodeSpec, CodeError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let parse_err = |line: usize, msg: &str| CodeError::Parse {
            line,
            msg: msg.to_string(),
        };

        let (line, magic) = lines.next().ok_or_else(|| parse_err(0, "empty spec"))?;
        if magic != "msr-code v1" {
            return Err(parse_err(line, "expected header `msr-code v1`"));
        }

        let mut code_id = None;
        let mut m = None;
        let mut p = None;
        let mut e = None;
        let mut modulus: Option<Vec<u16>> = None;
        let mut k = None;
        let mut pending: Option<(usize, &str)> = None;
        for (line, l) in lines.by_ref() {
            if l.starts_with("A ") {
                pending = Some((line, l));
                break;
            }
            let (key, value) = l
                .split_once(':')
                .ok_or_else(|| parse_err(line, "expected `key: value`"))?;
            let value = value.trim();
            match key.trim() {
                "code_id" => {
                    code_id = Some(
                        CodeId::from_str_id(value)
                            .ok_or_else(|| parse_err(line, "unknown code_id"))?,
                    )
                }
                "m" => m = Some(parse_num::<usize>(value, line)?),
                "p" => p = Some(parse_num::<u16>(value, line)?),
                "e" => e = Some(parse_num::<usize>(value, line)?),
                "modulus" => {
                    let coeffs = value
                        .split_whitespace()
                        .map(|v| parse_num::<u16>(v, line))
                        .collect::<Result<Vec<_>, _>>()?;
                    modulus = Some(coeffs);
                }
                "k" => k = Some(parse_num::<usize>(value, line)?),
                other => return Err(parse_err(line, &format!("unknown key `{other}`"))),
            }
        }

        let code_id = code_id.ok_or_else(|| parse_err(0, "missing code_id"))?;
        let m = m.ok_or_else(|| parse_err(0, "missing m"))?;
        let p = p.ok_or_else(|| parse_err(0, "missing p"))?;
        let e = e.ok_or_else(|| parse_err(0, "missing e"))?;
        let k = k.ok_or_else(|| parse_err(0, "missing k"))?;
        if m == 0 || m > 6 {
            return Err(CodeError::MOutOfRange(m));
        }
        let field = if e == 1 {
            FieldSpec::prime(p)?
        } else {
            let modulus = modulus.ok_or_else(|| parse_err(0, "missing modulus"))?;
            FieldSpec::with_modulus(p, e, &modulus)?
        };
        let alpha = 1usize << m;

        let mut rows_iter =
            std::iter::once(pending.ok_or_else(|| parse_err(0, "missing matrices"))?).chain(lines);
        let (coding, repair) = {
            let mut read_matrix =
                |tag: &str, index: usize, rows: usize| -> Result<Matrix, CodeError> {
                    let (line, header) = rows_iter
                        .next()
                        .ok_or_else(|| parse_err(0, "unexpected end of spec"))?;
                    let expect = format!("{tag} {index}");
                    if header != expect {
                        return Err(parse_err(line, &format!("expected `{expect}`")));
                    }
                    let mut entries = Vec::with_capacity(rows * alpha);
                    for _ in 0..rows {
                        let (line, row) = rows_iter
                            .next()
                            .ok_or_else(|| parse_err(0, "unexpected end of spec"))?;
                        let vals = row
                            .split_whitespace()
                            .map(|v| parse_num::<u32>(v, line))
                            .collect::<Result<Vec<_>, _>>()?;
                        if vals.len() != alpha {
                            return Err(parse_err(line, &format!("expected {alpha} entries")));
                        }
                        for v in vals {
                            entries.push(field.element(v)?);
                        }
                    }
                    Ok(Matrix::new(&field, rows, alpha, entries))
                };
            let mut coding = Vec::with_capacity(k);
            for i in 1..=k {
                coding.push(read_matrix("A", i, alpha)?);
            }
            let mut repair = Vec::with_capacity(k);
            for i in 1..=k {
                repair.push(read_matrix("S", i, alpha / 2)?);
            }
            (coding, repair)
        };
        if let Some((line, _)) = rows_iter.next() {
            return Err(parse_err(line, "unexpected content after the last matrix"));
        }

        let mut cancel = vec![vec![None; k]; k];
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let sa = repair[i].mat_mul(&coding[j]);
                cancel[i][j] = compute_cancellation(&repair[i], &sa);
            }
        }
        let access_optimal = repair.iter().map(|s| s.rows_are_unit_basis()).collect();
        let update_optimal = coding
            .iter()
            .map(|a| a.cols_have_single_nonzero())
            .collect();

        Ok(CodeSpec {
            code_id,
            m,
            field,
            coding,
            repair,
            cancel,
            access_optimal,
            update_optimal,
        })
    }
}

fn push_matrix(out: &mut String, mat: &Matrix) {
    for r in 0..mat.rows() {
        let row: Vec<String> = mat.row(r).iter().map(|v| v.index().to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn parse_num<T: std::str::FromStr>(v: &str, line: usize) -> Result<T, CodeError> {
    v.parse::<T>().map_err(|_| CodeError::Parse {
        line,
        msg: format!("invalid number `{v}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(q: u32) -> Arc<FieldSpec> {
        FieldSpec::of_order(q).unwrap()
    }

    fn assert_matrix(mat: &Matrix, expect: &[&[u32]]) {
        assert_eq!(mat.rows(), expect.len());
        for (r, row) in expect.iter().enumerate() {
            assert_eq!(mat.cols(), row.len());
            for (c, &v) in row.iter().enumerate() {
                assert_eq!(mat[(r, c)].index() as u32, v, "mismatch at ({r}, {c})");
            }
        }
    }

    #[test]
    fn generic_type_ii_node_matches_reference_matrix() {
        let f5 = gf(5);
        let two = f5.element(2).unwrap();
        let params = ConstructionParams {
            m: 2,
            field: Arc::clone(&f5),
            nodes: vec![NodeParams {
                action: PairAction::Swap {
                    lambda0: two.clone().into(),
                    lambda1: two.into(),
                },
                repair: RepairForm::V0,
            }],
        };
        let code = build_generic(&params).unwrap();
        assert_matrix(
            code.coding_matrix(1),
            &[&[0, 0, 2, 0], &[0, 0, 0, 2], &[2, 0, 0, 0], &[0, 2, 0, 0]],
        );
    }

    #[test]
    fn generic_type_i_identity_action() {
        let f5 = gf(5);
        let one = f5.one();
        let params = ConstructionParams {
            m: 2,
            field: Arc::clone(&f5),
            nodes: vec![NodeParams {
                action: PairAction::Diagonal {
                    lambda0: one.clone().into(),
                    lambda1: one.into(),
                },
                repair: RepairForm::V0,
            }],
        };
        let code = build_generic(&params).unwrap();
        assert_eq!(*code.coding_matrix(1), Matrix::identity(&f5, 4));
    }

    #[test]
    fn generic_type_iii_node_matches_reference_matrix() {
        // third node of the first example: axis 1, lambda = (2, 3), fill 1
        let f5 = gf(5);
        let params = ConstructionParams {
            m: 2,
            field: Arc::clone(&f5),
            nodes: vec![
                NodeParams {
                    action: PairAction::Diagonal {
                        lambda0: f5.one().into(),
                        lambda1: f5.one().into(),
                    },
                    repair: RepairForm::V0,
                },
                NodeParams {
                    action: PairAction::Diagonal {
                        lambda0: f5.one().into(),
                        lambda1: f5.one().into(),
                    },
                    repair: RepairForm::V0,
                },
                NodeParams {
                    action: PairAction::LowerFill {
                        lambda0: f5.element(2).unwrap().into(),
                        lambda1: f5.element(3).unwrap().into(),
                        k: f5.one().into(),
                    },
                    repair: RepairForm::Combined(f5.element(4).unwrap()),
                },
            ],
        };
        let code = build_generic(&params).unwrap();
        assert_matrix(
            code.coding_matrix(3),
            &[&[2, 0, 0, 0], &[0, 2, 0, 0], &[1, 0, 3, 0], &[0, 1, 0, 3]],
        );
    }

    #[test]
    fn singular_block_rejected() {
        let f5 = gf(5);
        let params = ConstructionParams {
            m: 1,
            field: Arc::clone(&f5),
            nodes: vec![NodeParams {
                action: PairAction::Diagonal {
                    lambda0: f5.zero().into(),
                    lambda1: f5.one().into(),
                },
                repair: RepairForm::V0,
            }],
        };
        assert!(matches!(
            build_generic(&params),
            Err(CodeError::SingularBlock { node: 1, pair: 0 })
        ));
    }

    #[test]
    fn repair_form_bound_enforced() {
        // four distinct repair forms on axis 1
        let f5 = gf(5);
        let node = |t: u32| NodeParams {
            action: PairAction::Diagonal {
                lambda0: f5.one().into(),
                lambda1: f5.element(2).unwrap().into(),
            },
            repair: RepairForm::Combined(f5.element(t).unwrap()),
        };
        let params = ConstructionParams {
            m: 1,
            field: Arc::clone(&f5),
            nodes: vec![node(0), node(1), node(2), node(3)],
        };
        assert!(matches!(
            build_generic(&params),
            Err(CodeError::RepairFormBound { axis: 1, count: 4 })
        ));
    }

    // The reference first-family instance: m = 2 over GF(5), every
    // entry frozen.
    #[test]
    fn c1_m2_gf5_matches_reference_matrices() {
        let code = build_c1(2, &gf(5)).unwrap();
        assert_eq!(code.k(), 6);
        assert_eq!(code.n(), 8);
        let expect_a: [&[&[u32]]; 6] = [
            &[&[0, 0, 2, 0], &[0, 0, 0, 2], &[2, 0, 0, 0], &[0, 2, 0, 0]],
            &[&[0, 4, 0, 0], &[4, 0, 0, 0], &[0, 0, 0, 4], &[0, 0, 4, 0]],
            &[&[2, 0, 0, 0], &[0, 2, 0, 0], &[1, 0, 3, 0], &[0, 1, 0, 3]],
            &[&[4, 0, 0, 0], &[2, 1, 0, 0], &[0, 0, 4, 0], &[0, 0, 2, 1]],
            &[&[3, 0, 0, 0], &[0, 3, 0, 0], &[1, 0, 2, 0], &[0, 1, 0, 2]],
            &[&[1, 0, 0, 0], &[2, 4, 0, 0], &[0, 0, 1, 0], &[0, 0, 2, 4]],
        ];
        let expect_s: [&[&[u32]]; 6] = [
            &[&[1, 0, 0, 0], &[0, 1, 0, 0]],
            &[&[1, 0, 0, 0], &[0, 0, 1, 0]],
            &[&[1, 0, 4, 0], &[0, 1, 0, 4]],
            &[&[1, 4, 0, 0], &[0, 0, 1, 4]],
            &[&[1, 0, 1, 0], &[0, 1, 0, 1]],
            &[&[1, 1, 0, 0], &[0, 0, 1, 1]],
        ];
        for i in 1..=6 {
            assert_matrix(code.coding_matrix(i), expect_a[i - 1]);
            assert_matrix(code.repair_matrix(i), expect_s[i - 1]);
        }
    }

    // The reference second-family instance: m = 3 over GF(4); gamma has
    // index 2, gamma^2 index 3.
    #[test]
    fn c2_m3_gf4_matches_reference_matrices() {
        let code = build_c2(3, &gf(4)).unwrap();
        assert_eq!(code.k(), 6);
        let alpha = 8usize;

        // helper to build expected grids from (row -> [(col, val)]) lists
        let grid = |entries: &[(usize, usize, u32)]| -> Vec<Vec<u32>> {
            let mut g = vec![vec![0u32; alpha]; alpha];
            for &(r, c, v) in entries {
                g[r][c] = v;
            }
            g
        };
        let a1 = grid(&[
            (0, 4, 2),
            (1, 5, 2),
            (2, 6, 2),
            (3, 7, 2),
            (4, 0, 2),
            (5, 1, 2),
            (6, 2, 2),
            (7, 3, 2),
        ]);
        let a2 = grid(&[
            (0, 2, 3),
            (1, 3, 3),
            (2, 0, 3),
            (3, 1, 3),
            (4, 6, 3),
            (5, 7, 3),
            (6, 4, 3),
            (7, 5, 3),
        ]);
        let a3 = grid(&[
            (0, 1, 1),
            (1, 0, 1),
            (2, 3, 1),
            (3, 2, 1),
            (4, 5, 1),
            (5, 4, 1),
            (6, 7, 1),
            (7, 6, 1),
        ]);
        let a4 = grid(&[
            (0, 0, 2),
            (1, 1, 2),
            (2, 2, 2),
            (3, 3, 2),
            (4, 4, 2),
            (4, 0, 1),
            (5, 5, 2),
            (5, 1, 1),
            (6, 6, 2),
            (6, 2, 1),
            (7, 7, 2),
            (7, 3, 1),
        ]);
        let a5 = grid(&[
            (0, 0, 3),
            (1, 1, 3),
            (2, 2, 3),
            (2, 0, 1),
            (3, 3, 3),
            (3, 1, 1),
            (4, 4, 3),
            (5, 5, 3),
            (6, 6, 3),
            (6, 4, 1),
            (7, 7, 3),
            (7, 5, 1),
        ]);
        let a6 = grid(&[
            (0, 0, 1),
            (1, 1, 1),
            (1, 0, 1),
            (2, 2, 1),
            (3, 3, 1),
            (3, 2, 1),
            (4, 4, 1),
            (5, 5, 1),
            (5, 4, 1),
            (6, 6, 1),
            (7, 7, 1),
            (7, 6, 1),
        ]);
        for (i, expect) in [a1, a2, a3, a4, a5, a6].iter().enumerate() {
            let rows: Vec<&[u32]> = expect.iter().map(|r| r.as_slice()).collect();
            assert_matrix(code.coding_matrix(i + 1), &rows);
        }

        let sgrid = |entries: &[(usize, usize)]| -> Vec<Vec<u32>> {
            let mut g = vec![vec![0u32; alpha]; 4];
            for &(r, c) in entries {
                g[r][c] = 1;
            }
            g
        };
        let s1 = sgrid(&[(0, 0), (1, 1), (2, 2), (3, 3)]);
        let s2 = sgrid(&[(0, 0), (1, 1), (2, 4), (3, 5)]);
        let s3 = sgrid(&[(0, 0), (1, 2), (2, 4), (3, 6)]);
        let s4 = sgrid(&[
            (0, 0),
            (0, 4),
            (1, 1),
            (1, 5),
            (2, 2),
            (2, 6),
            (3, 3),
            (3, 7),
        ]);
        let s5 = sgrid(&[
            (0, 0),
            (0, 2),
            (1, 1),
            (1, 3),
            (2, 4),
            (2, 6),
            (3, 5),
            (3, 7),
        ]);
        let s6 = sgrid(&[
            (0, 0),
            (0, 1),
            (1, 2),
            (1, 3),
            (2, 4),
            (2, 5),
            (3, 6),
            (3, 7),
        ]);
        for (i, expect) in [s1, s2, s3, s4, s5, s6].iter().enumerate() {
            let rows: Vec<&[u32]> = expect.iter().map(|r| r.as_slice()).collect();
            assert_matrix(code.repair_matrix(i + 1), &rows);
        }
    }

    // The reference third-family instance: m = 2 over GF(5).
    #[test]
    fn c3_m2_gf5_matches_reference_matrices() {
        let code = build_c3(2, &gf(5)).unwrap();
        let expect_a: [&[&[u32]]; 4] = [
            &[&[0, 0, 2, 0], &[0, 0, 0, 2], &[2, 0, 0, 0], &[0, 2, 0, 0]],
            &[&[0, 4, 0, 0], &[4, 0, 0, 0], &[0, 0, 0, 4], &[0, 0, 4, 0]],
            &[&[2, 0, 0, 0], &[0, 2, 0, 0], &[0, 0, 3, 0], &[0, 0, 0, 3]],
            &[&[4, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 4, 0], &[0, 0, 0, 1]],
        ];
        let expect_s: [&[&[u32]]; 4] = [
            &[&[1, 0, 0, 0], &[0, 1, 0, 0]],
            &[&[1, 0, 0, 0], &[0, 0, 1, 0]],
            &[&[1, 0, 1, 0], &[0, 1, 0, 1]],
            &[&[1, 1, 0, 0], &[0, 0, 1, 1]],
        ];
        for i in 1..=4 {
            assert_matrix(code.coding_matrix(i), expect_a[i - 1]);
            assert_matrix(code.repair_matrix(i), expect_s[i - 1]);
        }
    }

    // The reference fourth-family instance: m = 2 over GF(4).
    #[test]
    fn c4_m2_gf4_matches_reference_matrices() {
        let code = build_c4(2, &gf(4)).unwrap();
        let expect_a: [&[&[u32]]; 4] = [
            &[&[0, 0, 1, 0], &[0, 0, 0, 1], &[2, 0, 0, 0], &[0, 2, 0, 0]],
            &[&[0, 2, 0, 0], &[3, 0, 0, 0], &[0, 0, 0, 2], &[0, 0, 3, 0]],
            &[&[0, 0, 3, 0], &[0, 0, 0, 3], &[3, 0, 0, 0], &[0, 3, 0, 0]],
            &[&[0, 1, 0, 0], &[1, 0, 0, 0], &[0, 0, 0, 1], &[0, 0, 1, 0]],
        ];
        let expect_s: [&[&[u32]]; 4] = [
            &[&[1, 0, 1, 0], &[0, 1, 0, 1]],
            &[&[1, 1, 0, 0], &[0, 0, 1, 1]],
            &[&[1, 0, 2, 0], &[0, 1, 0, 2]],
            &[&[1, 2, 0, 0], &[0, 0, 1, 2]],
        ];
        for i in 1..=4 {
            assert_matrix(code.coding_matrix(i), expect_a[i - 1]);
            assert_matrix(code.repair_matrix(i), expect_s[i - 1]);
        }
    }

    #[test]
    fn builder_field_preconditions() {
        assert!(matches!(
            build_c1(2, &gf(3)),
            Err(CodeError::FieldConstraint { .. })
        ));
        assert!(matches!(
            build_c1(2, &gf(4)),
            Err(CodeError::FieldConstraint { .. })
        ));
        assert!(matches!(
            build_c2(3, &gf(2)),
            Err(CodeError::FieldConstraint { .. })
        ));
        assert!(matches!(
            build_c3(2, &gf(4)),
            Err(CodeError::FieldConstraint { .. })
        ));
        assert!(matches!(
            build_c4(2, &gf(5)),
            Err(CodeError::FieldConstraint { .. })
        ));
    }

    // C4 over GF(2): t_i = 1 and t_{i+m} = gamma = 1 collide, so the two
    // nodes of an axis get identical repair matrices.
    #[test]
    fn c4_m1_gf2_is_a_construction_failure() {
        assert!(matches!(
            build_c4(1, &gf(2)),
            Err(CodeError::DuplicateRepairMatrix { i: 1, j: 2 })
        ));
    }

    #[test]
    fn flags_match_expected_counts_for_m2() {
        let c1 = build_c1(2, &gf(5)).unwrap();
        assert_eq!(c1.access_flags(), &[true, true, false, false, false, false]);
        assert_eq!(c1.update_flags(), &[true, true, false, false, false, false]);

        let c3 = build_c3(2, &gf(5)).unwrap();
        assert_eq!(c3.access_flags(), &[true, true, false, false]);
        assert_eq!(c3.update_flags(), &[true, true, true, true]);

        let c4 = build_c4(2, &gf(4)).unwrap();
        assert_eq!(c4.access_flags(), &[false, false, false, false]);
        assert_eq!(c4.update_flags(), &[true, true, true, true]);
    }

    #[test]
    fn table1_rows_for_m2() {
        let codes = vec![
            build_c1(2, &gf(5)).unwrap(),
            build_c3(2, &gf(5)).unwrap(),
            build_c4(2, &gf(4)).unwrap(),
        ];
        let rows = table1_report(&codes);
        assert_eq!(
            (
                rows[0].k,
                rows[0].k_access,
                rows[0].k_update,
                rows[0].k_both,
                rows[0].q
            ),
            (6, 2, 2, 2, 5)
        );
        assert_eq!(
            (
                rows[1].k,
                rows[1].k_access,
                rows[1].k_update,
                rows[1].k_both
            ),
            (4, 2, 4, 2)
        );
        assert_eq!(
            (
                rows[2].k,
                rows[2].k_access,
                rows[2].k_update,
                rows[2].k_both
            ),
            (4, 0, 4, 0)
        );
    }

    // Span invariance: S_i A_j lies in the row space of S_i for every valid
    // code, witnessed by the cancellation maps, with matching ranks.
    #[test]
    fn cancellation_maps_exist_for_valid_codes() {
        let codes = [
            build_c1(2, &gf(5)).unwrap(),
            build_c2(2, &gf(4)).unwrap(),
            build_c3(2, &gf(5)).unwrap(),
            build_c4(2, &gf(4)).unwrap(),
            build_c1(3, &gf(7)).unwrap(),
        ];
        for code in &codes {
            for i in 1..=code.k() {
                for j in 1..=code.k() {
                    if i == j {
                        continue;
                    }
                    let m = code.cancellation(i, j).expect("cancellation must exist");
                    let lhs = m.mat_mul(code.repair_matrix(i));
                    let rhs = code.repair_matrix(i).mat_mul(code.coding_matrix(j));
                    assert_eq!(lhs, rhs);
                    assert_eq!(rhs.rank(), code.alpha() / 2);
                }
            }
        }
    }

    #[test]
    fn builder_repair_matrices_are_pairwise_distinct() {
        for code in [
            build_c1(3, &gf(7)).unwrap(),
            build_c2(3, &gf(4)).unwrap(),
            build_c3(3, &gf(7)).unwrap(),
            build_c4(3, &gf(4)).unwrap(),
        ] {
            for i in 1..=code.k() {
                for j in i + 1..=code.k() {
                    assert_ne!(code.repair_matrix(i), code.repair_matrix(j));
                }
            }
        }
    }

    #[test]
    fn text_round_trip_is_stable() {
        for code in [
            build_c1(2, &gf(5)).unwrap(),
            build_c2(3, &gf(4)).unwrap(),
            build_c3(1, &gf(3)).unwrap(),
        ] {
            let text = code.to_text();
            let parsed = CodeSpec::from_text(&text).unwrap();
            assert_eq!(parsed.to_text(), text);
            assert_eq!(parsed.k(), code.k());
            assert_eq!(parsed.access_flags(), code.access_flags());
            for i in 1..=code.k() {
                assert_eq!(parsed.coding_matrix(i), code.coding_matrix(i));
                assert_eq!(parsed.repair_matrix(i), code.repair_matrix(i));
            }
        }
    }

    #[test]
    fn parse_rejects_malformed_specs() {
        assert!(CodeSpec::from_text("").is_err());
        assert!(CodeSpec::from_text("not a spec\n").is_err());
        let good = build_c3(1, &gf(3)).unwrap().to_text();
        let truncated: String = good.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(CodeSpec::from_text(&truncated).is_err());
        let bad_entry = good.replace("\n0 2\n", "\n9 2\n");
        assert!(CodeSpec::from_text(&bad_entry).is_err());
        let trailing = format!("{good}stray line\n");
        assert!(CodeSpec::from_text(&trailing).is_err());
    }

    #[test]
    fn long_mds_flags() {
        // any nonzero lambda table exercises the structural flags
        let f5 = gf(5);
        let el = |v: u32| f5.element(v).unwrap();
        let lambda: Vec<(FieldElement, FieldElement)> = vec![
            (el(1), el(2)),
            (el(1), el(3)),
            (el(2), el(1)),
            (el(3), el(1)),
            (el(1), el(2)),
            (el(2), el(4)),
        ];
        let code = build_long_mds(2, &f5, &lambda).unwrap();
        assert_eq!(code.k(), 6);
        assert_eq!(code.access_flags(), &[true, true, true, true, false, false]);
        assert_eq!(
            code.update_flags(),
            &[false, false, false, false, true, true]
        );
    }

    #[test]
    fn zigzag_shape() {
        let f3 = gf(3);
        let one = f3.one();
        let two = f3.element(2).unwrap();
        let coeffs = vec![
            ZigzagCoeffs {
                lambda0: vec![one.clone(), two.clone()],
                lambda1: vec![one.clone(), one.clone()],
            },
            ZigzagCoeffs {
                lambda0: vec![two.clone(), one.clone()],
                lambda1: vec![one.clone(), two.clone()],
            },
        ];
        let code = build_modified_zigzag(2, &f3, &coeffs).unwrap();
        assert_eq!(code.k(), 2);
        // swap actions with standard-row repair sets keep both properties
        assert_eq!(code.access_flags(), &[true, true]);
        assert_eq!(code.update_flags(), &[true, true]);
    }
}
