//! File encode / reconstruct / repair on top of a built code, with bandwidth
//! and access accounting, plus the on-disk shard format.
//!
//! A file maps to field symbols (see [`bytes_to_symbols`]), splits into
//! stripes of k * alpha symbols (zero-padded), and each stripe contributes
//! alpha symbols to every node: parts f_1..f_k verbatim to the systematic
//! nodes, the sum to parity node k+1 and the coded combination to node k+2.

use std::sync::Arc;

use thiserror::Error;

use crate::codes::{CodeId, CodeSpec};
use crate::gf::{FieldError, FieldSpec};
use crate::linalg::{ColumnVector, LinalgError, Matrix};

pub const SHARD_MAGIC: &[u8; 4] = b"MSRS";
pub const SHARD_FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("need at least k = {k} distinct shards, got {got}")]
    NotEnoughShards { k: usize, got: usize },
    #[error("shard for node {0} supplied more than once")]
    DuplicateShard(usize),
    #[error("shard node index {got} out of range 1..={n}")]
    NodeOutOfRange { got: usize, n: usize },
    #[error("shard does not match the code spec: {0}")]
    MixedParameters(String),
    #[error("repairing node {failed} needs a shard from node {missing}")]
    MissingHelper { failed: usize, missing: usize },
    #[error("node {0} is not a systematic node")]
    NotSystematic(usize),
    #[error("node {0} is not a parity node")]
    NotParity(usize),
    #[error("interference cancellation unavailable for pair ({i}, {j}); the code is invalid")]
    RankFailure { i: usize, j: usize },
    #[error("shard format: {0}")]
    Format(String),
    #[error("decoded digit group exceeds a byte")]
    ByteOverflow,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

// ---- byte <-> symbol mapping ----

/// Base-q digits needed to cover one byte: the least d with q^d >= 256.
fn digits_per_byte(q: u16) -> usize {
    let mut d = 1;
    let mut cap = q as u64;
    while cap < 256 {
        cap *= q as u64;
        d += 1;
    }
    d
}

/// Map bytes to field symbols (canonical indices).
///
/// Characteristic 2: the bit stream (bytes emitted LSB first) is grouped e
/// bits at a time, first bit = constant coefficient. Odd characteristic:
/// each byte expands to ceil(8 / log2 q) base-q digits, least significant
/// first.
pub fn bytes_to_symbols(field: &Arc<FieldSpec>, data: &[u8]) -> Vec<u16> {
    if field.characteristic() == 2 {
        let e = field.degree();
        let total_bits = data.len() * 8;
        let symbols = total_bits.div_ceil(e);
        let mut out = Vec::with_capacity(symbols);
        let bit = |i: usize| -> u16 {
            if i < total_bits {
                (data[i / 8] >> (i % 8) & 1) as u16
            } else {
                0
            }
        };
        for s in 0..symbols {
            let mut idx = 0u16;
            for b in 0..e {
                idx |= bit(s * e + b) << b;
            }
            out.push(idx);
        }
        out
    } else {
        let q = field.order() as u32;
        let d = digits_per_byte(field.order());
        let mut out = Vec::with_capacity(data.len() * d);
        for &byte in data {
            let mut rest = byte as u32;
            for _ in 0..d {
                out.push((rest % q) as u16);
                rest /= q;
            }
        }
        out
    }
}

/// Invert [`bytes_to_symbols`], truncating to the original byte length.
pub fn symbols_to_bytes(
    field: &Arc<FieldSpec>,
    symbols: &[u16],
    original_length: u64,
) -> Result<Vec<u8>, CodecError> {
    let len = original_length as usize;
    if field.characteristic() == 2 {
        let e = field.degree();
        if symbols.len() * e < len * 8 {
            return Err(CodecError::Format(format!(
                "payload holds {} bits, file needs {}",
                symbols.len() * e,
                len * 8
            )));
        }
        let mut out = vec![0u8; len];
        for (s, &sym) in symbols.iter().enumerate() {
            for b in 0..e {
                let i = s * e + b;
                if i >= len * 8 {
                    break;
                }
                if sym >> b & 1 == 1 {
                    out[i / 8] |= 1 << (i % 8);
                }
            }
        }
        Ok(out)
    } else {
        let q = field.order() as u32;
        let d = digits_per_byte(field.order());
        if symbols.len() < len * d {
            return Err(CodecError::Format(format!(
                "payload holds {} symbols, file needs {}",
                symbols.len(),
                len * d
            )));
        }
        let mut out = Vec::with_capacity(len);
        for group in symbols.chunks(d).take(len) {
            let mut val = 0u32;
            for &digit in group.iter().rev() {
                val = val * q + digit as u32;
            }
            if val > 255 {
                return Err(CodecError::ByteOverflow);
            }
            out.push(val as u8);
        }
        Ok(out)
    }
}

// ---- shards ----

/// One node's stored data plus the header that makes it a file-format unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub node_index: usize,
    pub code_id: CodeId,
    pub m: usize,
    pub field: Arc<FieldSpec>,
    pub original_length: u64,
    pub stripe_count: u32,
    /// Canonical symbol indices, stripe-major, stripe_count * alpha entries.
    payload: Vec<u16>,
}

impl Shard {
    pub fn alpha(&self) -> usize {
        1 << self.m
    }

    pub fn payload(&self) -> &[u16] {
        &self.payload
    }

    /// The alpha symbols of one stripe as a column vector.
    pub fn stripe(&self, s: usize) -> ColumnVector {
        let alpha = self.alpha();
        let idx: Vec<u32> = self.payload[s * alpha..(s + 1) * alpha]
            .iter()
            .map(|&v| v as u32)
            .collect();
        ColumnVector::from_indices(&self.field, &idx)
    }

    /// Serialize to the bit-exact shard format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let e = self.field.degree();
        let mut out = Vec::with_capacity(24 + e + self.payload.len());
        out.extend_from_slice(SHARD_MAGIC);
        out.push(SHARD_FORMAT_VERSION);
        out.push(self.code_id.as_byte());
        out.push(self.m as u8);
        out.push(self.field.characteristic() as u8);
        out.push(e as u8);
        for &c in self.field.modulus() {
            out.push(c as u8);
        }
        out.extend_from_slice(&(self.node_index as u16).to_be_bytes());
        out.extend_from_slice(&self.original_length.to_be_bytes());
        out.extend_from_slice(&self.stripe_count.to_be_bytes());
        for &sym in &self.payload {
            out.push(sym as u8);
        }
        out
    }

    /// Parse the bit-exact shard format.
    pub fn from_bytes(data: &[u8]) -> Result<Shard, CodecError> {
        let fail = |msg: &str| CodecError::Format(msg.to_string());
        if data.len() < 9 {
            return Err(fail("truncated header"));
        }
        if &data[0..4] != SHARD_MAGIC {
            return Err(fail("bad magic"));
        }
        if data[4] != SHARD_FORMAT_VERSION {
            return Err(fail("unsupported format version"));
        }
        let code_id = CodeId::from_byte(data[5]).ok_or_else(|| fail("unknown code id"))?;
        let m = data[6] as usize;
        if m == 0 || m > 6 {
            return Err(fail("m out of range"));
        }
        let p = data[7] as u16;
        let e = data[8] as usize;
        if data.len() < 9 + e + 1 {
            return Err(fail("truncated modulus"));
        }
        let modulus: Vec<u16> = data[9..9 + e + 1].iter().map(|&b| b as u16).collect();
        let field = if e == 1 {
            FieldSpec::prime(p)?
        } else {
            FieldSpec::with_modulus(p, e, &modulus)?
        };
        let mut off = 9 + e + 1;
        let need = |data: &[u8], off: usize, n: usize| -> Result<(), CodecError> {
            if data.len() < off + n {
                Err(CodecError::Format("truncated header".into()))
            } else {
                Ok(())
            }
        };
        need(data, off, 2)?;
        let node_index = u16::from_be_bytes([data[off], data[off + 1]]) as usize;
        off += 2;
        need(data, off, 8)?;
        let original_length = u64::from_be_bytes(data[off..off + 8].try_into().unwrap());
        off += 8;
        need(data, off, 4)?;
        let stripe_count = u32::from_be_bytes(data[off..off + 4].try_into().unwrap());
        off += 4;
        if node_index == 0 {
            return Err(fail("node index must be >= 1"));
        }
        // for the known families k is determined by (code_id, m)
        if let Some(k) = crate::codes::family_k(code_id, m) {
            if node_index > k + 2 {
                return Err(fail("node index exceeds the family's node count"));
            }
        }
        let alpha = 1usize << m;
        let expect = stripe_count as usize * alpha;
        if data.len() != off + expect {
            return Err(fail("payload length mismatch"));
        }
        let mut payload = Vec::with_capacity(expect);
        for &b in &data[off..] {
            if b as u16 >= field.order() {
                return Err(fail("payload symbol out of field range"));
            }
            payload.push(b as u16);
        }
        Ok(Shard {
            node_index,
            code_id,
            m,
            field,
            original_length,
            stripe_count,
            payload,
        })
    }
}

fn check_shard(code: &CodeSpec, shard: &Shard) -> Result<(), CodecError> {
    if shard.code_id != code.code_id()
        || shard.m != code.m()
        || shard.field.as_ref() != code.field().as_ref()
    {
        return Err(CodecError::MixedParameters(format!(
            "shard ({}, m={}, {}) vs spec ({}, m={}, {})",
            shard.code_id,
            shard.m,
            shard.field,
            code.code_id(),
            code.m(),
            code.field()
        )));
    }
    if shard.node_index == 0 || shard.node_index > code.n() {
        return Err(CodecError::NodeOutOfRange {
            got: shard.node_index,
            n: code.n(),
        });
    }
    Ok(())
}

fn check_uniform(shards: &[&Shard]) -> Result<(), CodecError> {
    if let Some(first) = shards.first() {
        for s in &shards[1..] {
            if s.original_length != first.original_length || s.stripe_count != first.stripe_count {
                return Err(CodecError::MixedParameters(
                    "shards disagree on file length or stripe count".into(),
                ));
            }
        }
    }
    Ok(())
}

// ---- encode ----

/// Encode a byte stream into n = k + 2 shards. Empty input yields shards
/// with zero stripes.
pub fn encode(data: &[u8], code: &CodeSpec) -> Vec<Shard> {
    let field = code.field();
    let k = code.k();
    let alpha = code.alpha();
    let stripe_len = k * alpha;
    let mut symbols = bytes_to_symbols(field, data);
    let rem = symbols.len() % stripe_len;
    if rem != 0 {
        symbols.resize(symbols.len() + stripe_len - rem, 0);
    }
    let stripe_count = (symbols.len() / stripe_len) as u32;

    let mut payloads: Vec<Vec<u16>> = vec![Vec::with_capacity(symbols.len() / k); code.n()];
    for stripe in symbols.chunks(stripe_len) {
        let mut sum = ColumnVector::zeros(field, alpha);
        let mut coded = ColumnVector::zeros(field, alpha);
        for j in 0..k {
            let part = ColumnVector::from_indices(
                field,
                &stripe[j * alpha..(j + 1) * alpha]
                    .iter()
                    .map(|&v| v as u32)
                    .collect::<Vec<_>>(),
            );
            sum = sum.add(&part);
            coded = coded.add(&code.coding_matrix(j + 1).mat_vec(&part));
            payloads[j].extend(part.entries().iter().map(|x| x.index()));
        }
        payloads[k].extend(sum.entries().iter().map(|x| x.index()));
        payloads[k + 1].extend(coded.entries().iter().map(|x| x.index()));
    }

    payloads
        .into_iter()
        .enumerate()
        .map(|(idx, payload)| Shard {
            node_index: idx + 1,
            code_id: code.code_id(),
            m: code.m(),
            field: Arc::clone(field),
            original_length: data.len() as u64,
            stripe_count,
            payload,
        })
        .collect()
}

// ---- reconstruct ----

/// Reconstruct the original bytes from any k of the n shards.
///
/// With at most two systematic parts missing, the parity equations reduce to
/// alpha x alpha solves whose matrices are invertible exactly when the code
/// is MDS: A_i for a single loss repaired through the coded parity, and
/// A_i - A_j for a double loss.
pub fn reconstruct(shards: &[Shard], code: &CodeSpec) -> Result<Vec<u8>, CodecError> {
    let k = code.k();
    let n = code.n();
    let alpha = code.alpha();
    for s in shards {
        check_shard(code, s)?;
    }
    let mut by_node: Vec<Option<&Shard>> = vec![None; n];
    for s in shards {
        if by_node[s.node_index - 1].is_some() {
            return Err(CodecError::DuplicateShard(s.node_index));
        }
        by_node[s.node_index - 1] = Some(s);
    }
    let present = by_node.iter().flatten().count();
    if present < k {
        return Err(CodecError::NotEnoughShards { k, got: present });
    }
    let refs: Vec<&Shard> = by_node.iter().flatten().copied().collect();
    check_uniform(&refs)?;
    let (original_length, stripe_count) = {
        let first = refs[0];
        (first.original_length, first.stripe_count)
    };

    let missing: Vec<usize> = (1..=k).filter(|&i| by_node[i - 1].is_none()).collect();
    let parity1 = by_node[k];
    let parity2 = by_node[k + 1];

    // Pre-invert the solve matrix for the missing pattern.
    enum Plan<'a> {
        Direct,
        OneViaSum {
            i: usize,
            p1: &'a Shard,
        },
        OneViaCoded {
            i: usize,
            p2: &'a Shard,
            a_inv: Matrix,
        },
        Two {
            i: usize,
            j: usize,
            p1: &'a Shard,
            p2: &'a Shard,
            diff_inv: Matrix,
        },
    }
    let plan = match missing.as_slice() {
        [] => Plan::Direct,
        [i] => {
            if let Some(p1) = parity1 {
                Plan::OneViaSum { i: *i, p1 }
            } else {
                let p2 = parity2.expect("k shards with one systematic missing include a parity");
                Plan::OneViaCoded {
                    i: *i,
                    p2,
                    a_inv: code.coding_matrix(*i).inverse()?,
                }
            }
        }
        [i, j] => {
            let (p1, p2) = match (parity1, parity2) {
                (Some(a), Some(b)) => (a, b),
                _ => unreachable!("two missing systematic parts force both parities present"),
            };
            let diff = code.coding_matrix(*i).sub(code.coding_matrix(*j));
            Plan::Two {
                i: *i,
                j: *j,
                p1,
                p2,
                diff_inv: diff.inverse()?,
            }
        }
        _ => unreachable!("at most two of k + 2 nodes can be absent from k shards"),
    };

    let field = code.field();
    let mut symbols: Vec<u16> = Vec::with_capacity(stripe_count as usize * k * alpha);
    for s in 0..stripe_count as usize {
        let mut parts: Vec<Option<ColumnVector>> = (0..k)
            .map(|idx| by_node[idx].map(|sh| sh.stripe(s)))
            .collect();
        match &plan {
            Plan::Direct => {}
            Plan::OneViaSum { i, p1 } => {
                let mut acc = p1.stripe(s);
                for (idx, part) in parts.iter().enumerate() {
                    if idx + 1 != *i {
                        acc = acc.sub(part.as_ref().expect("only node i is missing"));
                    }
                }
                parts[*i - 1] = Some(acc);
            }
            Plan::OneViaCoded { i, p2, a_inv } => {
                let mut acc = p2.stripe(s);
                for (idx, part) in parts.iter().enumerate() {
                    if idx + 1 != *i {
                        let part = part.as_ref().expect("only node i is missing");
                        acc = acc.sub(&code.coding_matrix(idx + 1).mat_vec(part));
                    }
                }
                parts[*i - 1] = Some(a_inv.mat_vec(&acc));
            }
            Plan::Two {
                i,
                j,
                p1,
                p2,
                diff_inv,
            } => {
                let mut u = p1.stripe(s);
                let mut v = p2.stripe(s);
                for (idx, part) in parts.iter().enumerate() {
                    if idx + 1 != *i && idx + 1 != *j {
                        let part = part.as_ref().expect("present systematic part");
                        u = u.sub(part);
                        v = v.sub(&code.coding_matrix(idx + 1).mat_vec(part));
                    }
                }
                // (A_i - A_j) f_i = v - A_j u, then f_j = u - f_i
                let rhs = v.sub(&code.coding_matrix(*j).mat_vec(&u));
                let fi = diff_inv.mat_vec(&rhs);
                let fj = u.sub(&fi);
                parts[*i - 1] = Some(fi);
                parts[*j - 1] = Some(fj);
            }
        }
        for part in parts {
            let part = part.expect("all systematic parts recovered");
            symbols.extend(part.entries().iter().map(|x| x.index()));
        }
    }
    symbols_to_bytes(field, &symbols, original_length)
}

// ---- repair ----

/// Per-helper accounting for one stripe of a repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelperReport {
    pub node_index: usize,
    /// Symbols sent to the newcomer, per stripe.
    pub symbols_downloaded: usize,
    /// Symbols the helper had to read from its store, per stripe.
    pub symbols_read: usize,
    /// Field operations the helper performed, per stripe.
    pub field_ops: usize,
}

/// Everything a repair did: who helped, what moved, and the rebuilt shard.
#[derive(Debug, Clone)]
pub struct RepairTranscript {
    pub failed: usize,
    pub stripe_count: u32,
    pub helpers: Vec<HelperReport>,
    pub recovered: Shard,
}

impl RepairTranscript {
    pub fn downloaded_per_stripe(&self) -> usize {
        self.helpers.iter().map(|h| h.symbols_downloaded).sum()
    }

    pub fn total_downloaded(&self) -> usize {
        self.downloaded_per_stripe() * self.stripe_count as usize
    }

    pub fn helper_field_ops_per_stripe(&self) -> usize {
        self.helpers.iter().map(|h| h.field_ops).sum()
    }

    /// JSON text report of bandwidth, reads and helper operations.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!("  \"failed\": {},\n", self.failed));
        out.push_str(&format!("  \"stripes\": {},\n", self.stripe_count));
        out.push_str(&format!(
            "  \"downloaded_per_stripe\": {},\n",
            self.downloaded_per_stripe()
        ));
        out.push_str(&format!(
            "  \"downloaded_total\": {},\n",
            self.total_downloaded()
        ));
        out.push_str("  \"helpers\": [\n");
        for (idx, h) in self.helpers.iter().enumerate() {
            out.push_str(&format!(
                "    {{\"node\": {}, \"downloaded\": {}, \"read\": {}, \"field_ops\": {}}}{}\n",
                h.node_index,
                h.symbols_downloaded,
                h.symbols_read,
                h.field_ops,
                if idx + 1 == self.helpers.len() {
                    ""
                } else {
                    ","
                }
            ));
        }
        out.push_str("  ]\n}\n");
        out
    }
}

/// Field operations needed to apply a repair matrix to a stored column:
/// one multiply per entry not in {0, 1} and one add per extra nonzero in a
/// row. Zero exactly when every row is a plain unit basis row.
fn projection_cost(s: &Matrix) -> usize {
    let mut ops = 0;
    for r in 0..s.rows() {
        let row = s.row(r);
        let nnz = row.iter().filter(|x| !x.is_zero()).count();
        let muls = row.iter().filter(|x| !x.is_zero() && !x.is_one()).count();
        ops += muls + nnz.saturating_sub(1);
    }
    ops
}

/// Repair systematic node i from the other n - 1 shards, downloading alpha/2
/// symbols from each helper and cancelling interference through the cached
/// change-of-basis maps.
pub fn repair_systematic(
    i: usize,
    helpers: &[Shard],
    code: &CodeSpec,
) -> Result<RepairTranscript, CodecError> {
    let k = code.k();
    let n = code.n();
    if i == 0 || i > k {
        return Err(CodecError::NotSystematic(i));
    }
    for s in helpers {
        check_shard(code, s)?;
    }
    let mut by_node: Vec<Option<&Shard>> = vec![None; n];
    for s in helpers {
        if s.node_index == i {
            continue; // the failed node's own shard is not a helper
        }
        if by_node[s.node_index - 1].is_some() {
            return Err(CodecError::DuplicateShard(s.node_index));
        }
        by_node[s.node_index - 1] = Some(s);
    }
    for node in 1..=n {
        if node != i && by_node[node - 1].is_none() {
            return Err(CodecError::MissingHelper {
                failed: i,
                missing: node,
            });
        }
    }
    let refs: Vec<&Shard> = by_node.iter().flatten().copied().collect();
    check_uniform(&refs)?;
    let (original_length, stripe_count) = (refs[0].original_length, refs[0].stripe_count);

    let field = code.field();
    let alpha = code.alpha();
    let beta = code.beta();
    let s_i = code.repair_matrix(i);
    let access = code.access_optimal(i);
    let cost = projection_cost(s_i);

    // cancellation maps for every systematic helper
    let mut cancel: Vec<Option<&Matrix>> = vec![None; k + 1];
    for (j, slot) in cancel.iter_mut().enumerate().skip(1) {
        if j == i {
            continue;
        }
        *slot = Some(
            code.cancellation(i, j)
                .ok_or(CodecError::RankFailure { i, j })?,
        );
    }
    let system = s_i.stack(&s_i.mat_mul(code.coding_matrix(i)));
    let system_inv = system
        .inverse()
        .map_err(|_| CodecError::RankFailure { i, j: i })?;

    let mut payload: Vec<u16> = Vec::with_capacity(stripe_count as usize * alpha);
    for s in 0..stripe_count as usize {
        // what each helper sends: S_i f_j
        let mut y1 = s_i.mat_vec(&by_node[k].unwrap().stripe(s));
        let mut y2 = s_i.mat_vec(&by_node[k + 1].unwrap().stripe(s));
        for j in 1..=k {
            if j == i {
                continue;
            }
            let download = s_i.mat_vec(&by_node[j - 1].unwrap().stripe(s));
            y2 = y2.sub(&cancel[j].unwrap().mat_vec(&download));
            y1 = y1.sub(&download);
        }
        let recovered = system_inv.mat_vec(&y1.concat(&y2));
        payload.extend(recovered.entries().iter().map(|x| x.index()));
    }

    let helpers_report = (1..=n)
        .filter(|&node| node != i)
        .map(|node| HelperReport {
            node_index: node,
            symbols_downloaded: beta,
            symbols_read: if access { beta } else { alpha },
            field_ops: cost,
        })
        .collect();

    Ok(RepairTranscript {
        failed: i,
        stripe_count,
        helpers: helpers_report,
        recovered: Shard {
            node_index: i,
            code_id: code.code_id(),
            m: code.m(),
            field: Arc::clone(field),
            original_length,
            stripe_count,
            payload,
        },
    })
}

/// Repair a parity node the trivial way: download all k systematic parts
/// (k * alpha symbols per stripe) and recompute the combination.
pub fn repair_parity(
    p: usize,
    systematic: &[Shard],
    code: &CodeSpec,
) -> Result<RepairTranscript, CodecError> {
    let k = code.k();
    let n = code.n();
    if p <= k || p > n {
        return Err(CodecError::NotParity(p));
    }
    for s in systematic {
        check_shard(code, s)?;
    }
    let mut by_node: Vec<Option<&Shard>> = vec![None; k];
    for s in systematic {
        if s.node_index > k {
            continue;
        }
        if by_node[s.node_index - 1].is_some() {
            return Err(CodecError::DuplicateShard(s.node_index));
        }
        by_node[s.node_index - 1] = Some(s);
    }
    for node in 1..=k {
        if by_node[node - 1].is_none() {
            return Err(CodecError::MissingHelper {
                failed: p,
                missing: node,
            });
        }
    }
    let refs: Vec<&Shard> = by_node.iter().flatten().copied().collect();
    check_uniform(&refs)?;
    let (original_length, stripe_count) = (refs[0].original_length, refs[0].stripe_count);

    let field = code.field();
    let alpha = code.alpha();
    let mut payload: Vec<u16> = Vec::with_capacity(stripe_count as usize * alpha);
    for s in 0..stripe_count as usize {
        let mut acc = ColumnVector::zeros(field, alpha);
        for j in 1..=k {
            let part = by_node[j - 1].unwrap().stripe(s);
            if p == k + 1 {
                acc = acc.add(&part);
            } else {
                acc = acc.add(&code.coding_matrix(j).mat_vec(&part));
            }
        }
        payload.extend(acc.entries().iter().map(|x| x.index()));
    }

    let helpers_report = (1..=k)
        .map(|node| HelperReport {
            node_index: node,
            symbols_downloaded: alpha,
            symbols_read: alpha,
            field_ops: 0,
        })
        .collect();

    Ok(RepairTranscript {
        failed: p,
        stripe_count,
        helpers: helpers_report,
        recovered: Shard {
            node_index: p,
            code_id: code.code_id(),
            m: code.m(),
            field: Arc::clone(field),
            original_length,
            stripe_count,
            payload,
        },
    })
}

/// Number of parity symbols that change when one symbol of f_i changes:
/// one in the sum parity plus the nonzero count of the touched column of
/// A_i. Equals 2 at every position exactly for update-optimal nodes.
pub fn update_cost(i: usize, position: usize, code: &CodeSpec) -> usize {
    assert!(i >= 1 && i <= code.k(), "systematic node index required");
    assert!(position < code.alpha(), "position out of range");
    1 + code.coding_matrix(i).col_nonzero_count(position)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{build_c1, build_c3};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn gf(q: u32) -> Arc<FieldSpec> {
        FieldSpec::of_order(q).unwrap()
    }

    fn random_bytes(len: usize, rng: &mut StdRng) -> Vec<u8> {
        (0..len).map(|_| rng.gen()).collect()
    }

    #[test]
    fn digit_expansion_examples() {
        let f5 = gf(5);
        // 255 = 0 + 1*5 + 0*25 + 2*125
        assert_eq!(bytes_to_symbols(&f5, &[255]), vec![0, 1, 0, 2]);
        assert_eq!(bytes_to_symbols(&f5, &[1]), vec![1, 0, 0, 0]);
        let f3 = gf(3);
        assert_eq!(bytes_to_symbols(&f3, &[1]).len(), 6); // 3^6 = 729 >= 256

        let f4 = gf(4);
        // bits of 0b00000110 LSB-first: 0,1,1,0,... -> symbols (0,1)=2, (1,0)=1, 0, 0
        assert_eq!(bytes_to_symbols(&f4, &[6]), vec![2, 1, 0, 0]);
    }

    #[test]
    fn byte_symbol_round_trip_all_fields() {
        let mut rng = StdRng::seed_from_u64(99);
        for q in [2u32, 3, 4, 5, 7, 8, 9, 13, 16] {
            let f = gf(q);
            for len in [0usize, 1, 2, 7, 64, 255] {
                let data = random_bytes(len, &mut rng);
                let symbols = bytes_to_symbols(&f, &data);
                let back = symbols_to_bytes(&f, &symbols, len as u64).unwrap();
                assert_eq!(back, data, "q={q} len={len}");
            }
        }
    }

    #[test]
    fn zero_file_encodes_to_zero_shards() {
        let code = build_c1(2, &gf(5)).unwrap();
        let shards = encode(&[0u8; 12], &code);
        assert_eq!(shards.len(), 8);
        for s in &shards {
            assert!(s.payload().iter().all(|&v| v == 0));
            assert_eq!(s.stripe_count, 2); // 48 symbols, stripes of 24
        }
    }

    // A single-stripe impulse in f_1: the sum parity echoes it and the coded
    // parity holds the first column of A_1.
    #[test]
    fn impulse_hits_first_column_of_a1() {
        let code = build_c1(2, &gf(5)).unwrap();
        let data = [1u8, 0, 0, 0, 0, 0];
        let shards = encode(&data, &code);
        assert_eq!(shards[0].stripe_count, 1);
        assert_eq!(shards[0].payload(), &[1, 0, 0, 0]);
        assert_eq!(shards[6].payload(), &[1, 0, 0, 0]);
        assert_eq!(shards[7].payload(), &[0, 0, 2, 0]);
    }

    #[test]
    fn reconstruct_from_various_subsets() {
        let mut rng = StdRng::seed_from_u64(5);
        let code = build_c3(2, &gf(5)).unwrap();
        let data = random_bytes(100, &mut rng);
        let shards = encode(&data, &code);
        let k = code.k();

        // all systematic
        let subset: Vec<Shard> = shards[0..k].to_vec();
        assert_eq!(reconstruct(&subset, &code).unwrap(), data);

        // nodes {2..k, k+1}
        let mut subset: Vec<Shard> = shards[1..k].to_vec();
        subset.push(shards[k].clone());
        assert_eq!(reconstruct(&subset, &code).unwrap(), data);

        // nodes {2..k, k+2} uses the coded parity alone
        let mut subset: Vec<Shard> = shards[1..k].to_vec();
        subset.push(shards[k + 1].clone());
        assert_eq!(reconstruct(&subset, &code).unwrap(), data);

        // nodes {1..k-2, k+1, k+2} exercises the A_i - A_j solve
        let mut subset: Vec<Shard> = shards[0..k - 2].to_vec();
        subset.push(shards[k].clone());
        subset.push(shards[k + 1].clone());
        assert_eq!(reconstruct(&subset, &code).unwrap(), data);
    }

    #[test]
    fn reconstruct_errors() {
        let code = build_c3(2, &gf(5)).unwrap();
        let data = [7u8; 40];
        let shards = encode(&data, &code);
        let too_few: Vec<Shard> = shards[0..2].to_vec();
        assert!(matches!(
            reconstruct(&too_few, &code),
            Err(CodecError::NotEnoughShards { k: 4, got: 2 })
        ));

        let other = build_c1(2, &gf(5)).unwrap();
        let foreign = encode(&data, &other);
        assert!(matches!(
            reconstruct(&foreign[0..6], &code),
            Err(CodecError::MixedParameters(_))
        ));

        let mut dup = shards[0..4].to_vec();
        dup[3] = shards[0].clone();
        assert!(matches!(
            reconstruct(&dup, &code),
            Err(CodecError::DuplicateShard(1))
        ));
    }

    // Independent oracle: assemble the full k*alpha x k*alpha system from the
    // available nodes' equations and solve it generically.
    fn reconstruct_via_dense_solve(shards: &[Shard], code: &CodeSpec) -> Vec<u8> {
        let field = code.field();
        let k = code.k();
        let alpha = code.alpha();
        let width = k * alpha;
        let stripe_count = shards[0].stripe_count as usize;
        let mut symbols = Vec::new();
        for s in 0..stripe_count {
            let mut rows: Vec<Matrix> = Vec::new();
            let mut rhs = Vec::new();
            for sh in shards.iter().take(k) {
                let mut block = Matrix::zeros(field, alpha, width);
                if sh.node_index <= k {
                    for r in 0..alpha {
                        block.set(r, (sh.node_index - 1) * alpha + r, field.one());
                    }
                } else {
                    for j in 0..k {
                        let coeff = if sh.node_index == k + 1 {
                            Matrix::identity(field, alpha)
                        } else {
                            code.coding_matrix(j + 1).clone()
                        };
                        for r in 0..alpha {
                            for c in 0..alpha {
                                block.set(r, j * alpha + c, coeff[(r, c)].clone());
                            }
                        }
                    }
                }
                rows.push(block);
                rhs.extend(sh.stripe(s).entries().to_vec());
            }
            let mut system = rows[0].clone();
            for b in &rows[1..] {
                system = system.stack(b);
            }
            let solution = system
                .solve(&ColumnVector::new(field, rhs))
                .expect("available subset must determine the stripe");
            symbols.extend(solution.entries().iter().map(|x| x.index()));
        }
        symbols_to_bytes(field, &symbols, shards[0].original_length).unwrap()
    }

    #[test]
    fn reconstruct_agrees_with_dense_solve_oracle() {
        let mut rng = StdRng::seed_from_u64(17);
        let code = build_c3(2, &gf(5)).unwrap();
        let data = random_bytes(60, &mut rng);
        let shards = encode(&data, &code);
        // drop nodes 1 and 3, keep 2, 4 and both parities
        let subset = vec![
            shards[1].clone(),
            shards[3].clone(),
            shards[4].clone(),
            shards[5].clone(),
        ];
        let fast = reconstruct(&subset, &code).unwrap();
        let oracle = reconstruct_via_dense_solve(&subset, &code);
        assert_eq!(fast, oracle);
        assert_eq!(fast, data);
    }

    #[test]
    fn repair_recovers_each_systematic_node() {
        let mut rng = StdRng::seed_from_u64(31);
        let code = build_c1(2, &gf(5)).unwrap();
        let data = random_bytes(80, &mut rng);
        let shards = encode(&data, &code);
        for i in 1..=code.k() {
            let helpers: Vec<Shard> = shards
                .iter()
                .filter(|s| s.node_index != i)
                .cloned()
                .collect();
            let transcript = repair_systematic(i, &helpers, &code).unwrap();
            assert_eq!(&transcript.recovered, &shards[i - 1]);
            assert_eq!(transcript.downloaded_per_stripe(), 14);
            assert_eq!(transcript.downloaded_per_stripe(), code.repair_bandwidth());
            for h in &transcript.helpers {
                assert_eq!(h.symbols_downloaded, code.beta());
            }
        }
    }

    #[test]
    fn repair_access_accounting() {
        let code = build_c1(2, &gf(5)).unwrap();
        let data = [3u8; 30];
        let shards = encode(&data, &code);

        // node 1 is access-optimal: helpers do no field work and read beta
        let helpers: Vec<Shard> = shards
            .iter()
            .filter(|s| s.node_index != 1)
            .cloned()
            .collect();
        let t = repair_systematic(1, &helpers, &code).unwrap();
        for h in &t.helpers {
            assert_eq!(h.field_ops, 0);
            assert_eq!(h.symbols_read, code.beta());
        }

        // node 3 is not: helpers read their full column and compute
        let helpers: Vec<Shard> = shards
            .iter()
            .filter(|s| s.node_index != 3)
            .cloned()
            .collect();
        let t = repair_systematic(3, &helpers, &code).unwrap();
        for h in &t.helpers {
            assert!(h.field_ops > 0);
            assert_eq!(h.symbols_read, code.alpha());
        }

        // no node of the fourth family is access-optimal, so even its last
        // node repairs exactly but costs helper work
        let c4 = crate::codes::build_c4(2, &gf(4)).unwrap();
        let shards = encode(&[6u8; 24], &c4);
        let last = 2 * c4.m();
        let helpers: Vec<Shard> = shards
            .iter()
            .filter(|s| s.node_index != last)
            .cloned()
            .collect();
        let t = repair_systematic(last, &helpers, &c4).unwrap();
        assert_eq!(&t.recovered, &shards[last - 1]);
        assert!(t.helpers.iter().all(|h| h.field_ops > 0));
    }

    #[test]
    fn repair_missing_helper_is_an_error() {
        let code = build_c1(2, &gf(5)).unwrap();
        let shards = encode(&[1u8; 10], &code);
        let helpers: Vec<Shard> = shards
            .iter()
            .filter(|s| s.node_index != 1 && s.node_index != 5)
            .cloned()
            .collect();
        assert!(matches!(
            repair_systematic(1, &helpers, &code),
            Err(CodecError::MissingHelper {
                failed: 1,
                missing: 5
            })
        ));
    }

    #[test]
    fn parity_repair_recomputes_and_costs_full_download() {
        let mut rng = StdRng::seed_from_u64(41);
        let code = build_c3(2, &gf(5)).unwrap();
        let data = random_bytes(64, &mut rng);
        let shards = encode(&data, &code);
        for p in [code.k() + 1, code.k() + 2] {
            let t = repair_parity(p, &shards[0..code.k()], &code).unwrap();
            assert_eq!(&t.recovered, &shards[p - 1]);
            assert_eq!(
                t.downloaded_per_stripe(),
                code.k() * code.alpha(),
                "trivial parity repair downloads the whole stripe"
            );
        }
        assert!(matches!(
            repair_parity(1, &shards[0..4], &code),
            Err(CodecError::NotParity(1))
        ));
    }

    #[test]
    fn update_cost_examples() {
        let f5 = gf(5);
        let c3 = build_c3(2, &f5).unwrap();
        for pos in 0..4 {
            assert_eq!(update_cost(3, pos, &c3), 2);
        }

        // first-family node 3 has the fill coefficient in the columns of
        // V_{1,0}, so writes there touch one extra parity symbol
        let c1 = build_c1(2, &f5).unwrap();
        assert_eq!(update_cost(3, 0, &c1), 3);
        assert_eq!(update_cost(3, 1, &c1), 3);
        assert_eq!(update_cost(3, 2, &c1), 2);
        assert_eq!(update_cost(3, 3, &c1), 2);

        // diagonal coding matrix: always 2
        let c3 = build_c3(2, &f5).unwrap();
        assert_eq!(update_cost(4, 2, &c3), 2);
    }

    #[test]
    fn shard_bytes_round_trip_and_golden_header() {
        let code = build_c1(2, &gf(5)).unwrap();
        let shards = encode(&[1u8, 0, 0, 0, 0, 0], &code);
        let sum_parity = &shards[6];
        let bytes = sum_parity.to_bytes();
        let expect: Vec<u8> = vec![
            0x4D, 0x53, 0x52, 0x53, // "MSRS"
            0x01, // version
            0x01, // code id c1
            0x02, // m
            0x05, // p
            0x01, // e
            0x00, 0x01, // modulus x
            0x00, 0x07, // node index 7
            0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x06, // original length 6
            0x00, 0x00, 0x00, 0x01, // one stripe
            0x01, 0x00, 0x00, 0x00, // payload
        ];
        assert_eq!(bytes, expect);
        let parsed = Shard::from_bytes(&bytes).unwrap();
        assert_eq!(&parsed, sum_parity);
    }

    #[test]
    fn shard_parse_rejects_corruption() {
        let code = build_c1(2, &gf(5)).unwrap();
        let bytes = encode(&[9u8; 6], &code)[0].to_bytes();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(Shard::from_bytes(&bad_magic).is_err());

        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(Shard::from_bytes(&bad_version).is_err());

        let truncated = &bytes[..bytes.len() - 1];
        assert!(Shard::from_bytes(truncated).is_err());

        let mut bad_symbol = bytes.clone();
        let last = bad_symbol.len() - 1;
        bad_symbol[last] = 5; // out of range for GF(5)
        assert!(Shard::from_bytes(&bad_symbol).is_err());

        let mut bad_node = bytes.clone();
        bad_node[12] = 9; // first family with m = 2 has only 8 nodes
        assert!(Shard::from_bytes(&bad_node).is_err());
    }

    #[test]
    fn empty_file_round_trip() {
        let code = build_c3(1, &gf(3)).unwrap();
        let shards = encode(&[], &code);
        assert_eq!(shards[0].stripe_count, 0);
        let back = reconstruct(&shards[0..code.k()], &code).unwrap();
        assert!(back.is_empty());
        let bytes = shards[0].to_bytes();
        assert_eq!(Shard::from_bytes(&bytes).unwrap(), shards[0]);
    }
}
