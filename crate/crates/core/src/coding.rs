//! Systematic MDS codes over GF(2^8) for functional caching.
//!
//! A file coded (n, k) keeps its n server chunks unchanged while up to k
//! additional cache chunks extend the code to (n+k, k): any k of the n+k
//! chunks reconstruct the payload. The generator uses Cauchy parity rows, so
//! every square parity submatrix is nonsingular and the extended code is MDS
//! by construction.

use thiserror::Error;

const FIELD_POLY: u16 = 0x11d; // x^8 + x^4 + x^3 + x^2 + 1

// exp table doubled so products of logs index without a mod 255
const fn build_tables() -> ([u8; 512], [u8; 256]) {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= FIELD_POLY;
        }
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    (exp, log)
}

static TABLES: ([u8; 512], [u8; 256]) = build_tables();

/// Element of GF(2^8); addition is XOR, multiplication via log tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FieldElement(pub u8);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn add(self, other: FieldElement) -> FieldElement {
        FieldElement(self.0 ^ other.0)
    }

    pub fn mul(self, other: FieldElement) -> FieldElement {
        if self.0 == 0 || other.0 == 0 {
            return FieldElement::ZERO;
        }
        let (exp, log) = &TABLES;
        FieldElement(exp[log[self.0 as usize] as usize + log[other.0 as usize] as usize])
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(self) -> Option<FieldElement> {
        if self.0 == 0 {
            return None;
        }
        let (exp, log) = &TABLES;
        Some(FieldElement(exp[255 - log[self.0 as usize] as usize]))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CodingError {
    #[error("code parameters (n={n}, k={k}) exceed field capacity: need n+k <= 256 and k >= 1")]
    BadParameters { n: usize, k: usize },
    #[error("cannot encode an empty payload")]
    EmptyPayload,
    #[error("decode needs exactly {expected} chunks, got {got}")]
    WrongChunkCount { expected: usize, got: usize },
    #[error("duplicate chunk row index {index}")]
    DuplicateRow { index: usize },
    #[error("chunk row index {index} out of range for a {rows}-row generator")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("chunk payloads have unequal lengths")]
    UnequalChunkLengths,
    #[error("selected rows are singular; chunks cannot reconstruct the payload")]
    SingularSubset,
}

/// Systematic (n+k, k) generator: identity on the first k rows, Cauchy
/// parity on the remaining n rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    n: usize,
    k: usize,
    rows: Vec<Vec<FieldElement>>,
}

impl GeneratorMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_rows(&self) -> usize {
        self.n + self.k
    }

    pub fn row(&self, idx: usize) -> &[FieldElement] {
        &self.rows[idx]
    }
}

/// Builds the systematic (n+k, k) generator.
///
/// Parity row p uses Cauchy coefficients 1/(x_p + y_c) with x drawn from
/// {k..k+n-1} and y from {0..k-1}; disjoint index sets keep every
/// denominator nonzero and every parity minor nonsingular.
pub fn make_generator(n: usize, k: usize) -> Result<GeneratorMatrix, CodingError> {
    if k < 1 || k > n || n + k > 256 {
        return Err(CodingError::BadParameters { n, k });
    }
    let mut rows = Vec::with_capacity(n + k);
    for i in 0..k {
        let mut row = vec![FieldElement::ZERO; k];
        row[i] = FieldElement::ONE;
        rows.push(row);
    }
    for p in 0..n {
        let x = FieldElement((k + p) as u8);
        let row = (0..k)
            .map(|c| {
                let y = FieldElement(c as u8);
                x.add(y).inv().expect("disjoint Cauchy index sets")
            })
            .collect();
        rows.push(row);
    }
    Ok(GeneratorMatrix { n, k, rows })
}

/// Which tier a chunk index belongs to once d cache chunks are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkRole {
    Server,
    CacheActive,
    CacheReserve,
}

/// All n+k coded chunks of one file.
///
/// Chunks 0..n-1 map to the file's placement nodes in order; chunks
/// n..n+k-1 are the cache extension, activated in index order as the
/// file's cache allocation d grows. Payloads never depend on d.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedFile {
    pub file_id: usize,
    pub chunk_len: usize,
    pub payload_len: usize,
    chunks: Vec<Vec<u8>>,
    n: usize,
    k: usize,
}

impl CodedFile {
    pub fn chunk(&self, idx: usize) -> &[u8] {
        &self.chunks[idx]
    }

    pub fn num_chunks(&self) -> usize {
        self.chunks.len()
    }

    pub fn role(&self, idx: usize, d: usize) -> ChunkRole {
        if idx < self.n {
            ChunkRole::Server
        } else if idx < self.n + d.min(self.k) {
            ChunkRole::CacheActive
        } else {
            ChunkRole::CacheReserve
        }
    }
}

/// Encodes a payload into n+k chunks of length ceil(len/k), zero padded.
pub fn encode(
    generator: &GeneratorMatrix,
    file_id: usize,
    payload: &[u8],
) -> Result<CodedFile, CodingError> {
    if payload.is_empty() {
        return Err(CodingError::EmptyPayload);
    }
    let k = generator.k;
    let chunk_len = payload.len().div_ceil(k);
    let mut stripes = vec![vec![0u8; chunk_len]; k];
    for (pos, &byte) in payload.iter().enumerate() {
        stripes[pos / chunk_len][pos % chunk_len] = byte;
    }
    let chunks = generator
        .rows
        .iter()
        .map(|row| {
            let mut out = vec![0u8; chunk_len];
            for (coeff, stripe) in row.iter().zip(&stripes) {
                if coeff.0 == 0 {
                    continue;
                }
                for (o, &s) in out.iter_mut().zip(stripe.iter()) {
                    *o = FieldElement(*o).add(coeff.mul(FieldElement(s))).0;
                }
            }
            out
        })
        .collect();
    Ok(CodedFile {
        file_id,
        chunk_len,
        payload_len: payload.len(),
        chunks,
        n: generator.n,
        k,
    })
}

/// Reconstructs the payload from any k chunks given their row indices.
pub fn decode(
    generator: &GeneratorMatrix,
    chunks: &[(usize, &[u8])],
    payload_len: usize,
) -> Result<Vec<u8>, CodingError> {
    let k = generator.k;
    if chunks.len() != k {
        return Err(CodingError::WrongChunkCount {
            expected: k,
            got: chunks.len(),
        });
    }
    let mut seen = vec![false; generator.num_rows()];
    for &(idx, _) in chunks {
        if idx >= generator.num_rows() {
            return Err(CodingError::RowOutOfRange {
                index: idx,
                rows: generator.num_rows(),
            });
        }
        if seen[idx] {
            return Err(CodingError::DuplicateRow { index: idx });
        }
        seen[idx] = true;
    }
    let chunk_len = chunks[0].1.len();
    if chunks.iter().any(|(_, c)| c.len() != chunk_len) {
        return Err(CodingError::UnequalChunkLengths);
    }

    // invert the k x k submatrix once, then apply it per byte position
    let inverse = invert(
        chunks
            .iter()
            .map(|&(idx, _)| generator.rows[idx].clone())
            .collect(),
    )
    .ok_or(CodingError::SingularSubset)?;

    let mut payload = vec![0u8; k * chunk_len];
    for (s, inv_row) in inverse.iter().enumerate() {
        let stripe = &mut payload[s * chunk_len..(s + 1) * chunk_len];
        for (coeff, &(_, chunk)) in inv_row.iter().zip(chunks.iter()) {
            if coeff.0 == 0 {
                continue;
            }
            for (o, &c) in stripe.iter_mut().zip(chunk.iter()) {
                *o = FieldElement(*o).add(coeff.mul(FieldElement(c))).0;
            }
        }
    }
    payload.truncate(payload_len);
    Ok(payload)
}

/// Gauss-Jordan inverse over GF(2^8); `None` when singular.
fn invert(mut a: Vec<Vec<FieldElement>>) -> Option<Vec<Vec<FieldElement>>> {
    let k = a.len();
    let mut inv: Vec<Vec<FieldElement>> = (0..k)
        .map(|i| {
            let mut row = vec![FieldElement::ZERO; k];
            row[i] = FieldElement::ONE;
            row
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| a[r][col].0 != 0)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = a[col][col].inv()?;
        for j in 0..k {
            a[col][j] = a[col][j].mul(scale);
            inv[col][j] = inv[col][j].mul(scale);
        }
        for r in 0..k {
            if r == col || a[r][col].0 == 0 {
                continue;
            }
            let factor = a[r][col];
            for j in 0..k {
                let sub = factor.mul(a[col][j]);
                a[r][j] = a[r][j].add(sub);
                let sub_inv = factor.mul(inv[col][j]);
                inv[r][j] = inv[r][j].add(sub_inv);
            }
        }
    }
    Some(inv)
}

/// Result of an MDS subset check.
#[derive(Debug, Clone, PartialEq)]
pub struct MdsReport {
    pub subsets_checked: u64,
    /// True when every k-subset was enumerated; false for a random sample.
    pub exhaustive: bool,
    pub failure_count: u64,
    /// Failing subsets, capped at 100 entries.
    pub failures: Vec<Vec<usize>>,
}

impl MdsReport {
    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }
}

pub const DEFAULT_MDS_BUDGET: u64 = 1_000_000;

fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k.min(n));
    let mut result: u64 = 1;
    for i in 0..k {
        result = result.checked_mul(n - i)?;
        result /= i + 1;
    }
    Some(result)
}

/// Decodes a random payload from k-subsets of generator rows.
///
/// Enumerates every subset when C(n+k, k) fits the budget, otherwise
/// checks `budget` uniformly sampled subsets (seeded, reproducible).
pub fn verify_mds(generator: &GeneratorMatrix, budget: u64, seed: u64) -> MdsReport {
    use rand::prelude::*;
    use rand::SeedableRng;

    let rows = generator.num_rows();
    let k = generator.k;
    let payload: Vec<u8> = {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..4 * k).map(|_| rng.gen()).collect()
    };
    let coded = encode(generator, 0, &payload).expect("non-empty payload");

    let mut report = MdsReport {
        subsets_checked: 0,
        exhaustive: true,
        failure_count: 0,
        failures: Vec::new(),
    };
    let check = |subset: &[usize], report: &mut MdsReport| {
        let chunks: Vec<(usize, &[u8])> = subset.iter().map(|&i| (i, coded.chunk(i))).collect();
        let ok = matches!(decode(generator, &chunks, payload.len()), Ok(p) if p == payload);
        report.subsets_checked += 1;
        if !ok {
            report.failure_count += 1;
            if report.failures.len() < 100 {
                report.failures.push(subset.to_vec());
            }
        }
    };

    let total = binomial(rows as u64, k as u64);
    if total.is_some_and(|t| t <= budget) {
        // lexicographic enumeration of k-subsets
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            check(&subset, &mut report);
            let mut i = k;
            loop {
                if i == 0 {
                    return report;
                }
                i -= 1;
                if subset[i] != i + rows - k {
                    break;
                }
            }
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
        }
    } else {
        report.exhaustive = false;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        let mut indices: Vec<usize> = (0..rows).collect();
        for _ in 0..budget {
            indices.shuffle(&mut rng);
            let mut subset: Vec<usize> = indices[..k].to_vec();
            subset.sort_unstable();
            check(&subset, &mut report);
        }
        report
    }
}

/// Hand-picked (8,5) coefficient rows for the prime-field checker: the 5×5
/// identity extended by parity rows (1,1,1,1,1), (1,2,3,4,5), (1,2,4,8,16).
/// Not MDS: rows {2,3,4,6,7} and {1,2,5,6,7} select singular submatrices
/// over GF(17) (the first over any field).
pub fn prime_example_rows() -> Vec<Vec<u64>> {
    let mut rows: Vec<Vec<u64>> = (0..5)
        .map(|i| (0..5).map(|j| u64::from(i == j)).collect())
        .collect();
    rows.push(vec![1, 1, 1, 1, 1]);
    rows.push(vec![1, 2, 3, 4, 5]);
    rows.push(vec![1, 2, 4, 8, 16]);
    rows
}

/// Exhaustive MDS subset check for an explicit generator over the prime
/// field GF(p). Reference checker for hand-specified coefficient rows;
/// the production codec above works in GF(2^8).
pub fn verify_mds_prime(rows: &[Vec<u64>], p: u64) -> MdsReport {
    let k = rows[0].len();
    assert!(rows.iter().all(|r| r.len() == k), "ragged generator");
    let mut report = MdsReport {
        subsets_checked: 0,
        exhaustive: true,
        failure_count: 0,
        failures: Vec::new(),
    };
    let mut subset: Vec<usize> = (0..k).collect();
    let total_rows = rows.len();
    loop {
        let sub: Vec<Vec<u64>> = subset.iter().map(|&i| rows[i].clone()).collect();
        report.subsets_checked += 1;
        if !invertible_mod_p(sub, p) {
            report.failure_count += 1;
            if report.failures.len() < 100 {
                report.failures.push(subset.clone());
            }
        }
        let mut i = k;
        loop {
            if i == 0 {
                return report;
            }
            i -= 1;
            if subset[i] != i + total_rows - k {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

fn invertible_mod_p(mut a: Vec<Vec<u64>>, p: u64) -> bool {
    let k = a.len();
    for row in &mut a {
        for v in row.iter_mut() {
            *v %= p;
        }
    }
    for col in 0..k {
        let Some(pivot) = (col..k).find(|&r| a[r][col] % p != 0) else {
            return false;
        };
        a.swap(col, pivot);
        let inv = mod_inverse(a[col][col], p);
        for r in col + 1..k {
            let factor = a[r][col] * inv % p;
            if factor == 0 {
                continue;
            }
            for j in col..k {
                a[r][j] = (a[r][j] + p - factor * a[col][j] % p) % p;
            }
        }
    }
    true
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // Fermat: a^(p-2) mod p
    let mut result = 1u64;
    let mut base = a % p;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn field_axioms() {
        // exhaustive inverses, sampled associativity/distributivity
        for v in 1..=255u8 {
            let e = FieldElement(v);
            let inv = e.inv().unwrap();
            assert_eq!(e.mul(inv), FieldElement::ONE, "inverse of {v}");
        }
        assert_eq!(FieldElement::ZERO.inv(), None);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let a = FieldElement(rng.gen());
            let b = FieldElement(rng.gen());
            let c = FieldElement(rng.gen());
            assert_eq!(a.mul(b), b.mul(a));
            assert_eq!(a.mul(b.mul(c)), a.mul(b).mul(c));
            assert_eq!(a.mul(b.add(c)), a.mul(b).add(a.mul(c)));
            assert_eq!(a.mul(FieldElement::ZERO), FieldElement::ZERO);
            assert_eq!(a.mul(FieldElement::ONE), a);
        }
    }

    #[test]
    fn generator_shape_and_systematic_prefix() {
        let g = make_generator(7, 4).unwrap();
        assert_eq!(g.num_rows(), 11);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j {
                    FieldElement::ONE
                } else {
                    FieldElement::ZERO
                };
                assert_eq!(g.row(i)[j], expect);
            }
        }
    }

    #[test]
    fn generator_1_1() {
        let g = make_generator(1, 1).unwrap();
        assert_eq!(g.row(0), &[FieldElement::ONE]);
        assert_ne!(g.row(1)[0], FieldElement::ZERO);
        let report = verify_mds(&g, DEFAULT_MDS_BUDGET, 1);
        assert_eq!(report.subsets_checked, 2);
        assert!(report.passed());
    }

    #[test]
    fn generator_rejects_bad_parameters() {
        assert!(make_generator(0, 0).is_err());
        assert!(make_generator(3, 4).is_err());
        assert!(make_generator(200, 57).is_err());
        assert!(make_generator(128, 128).is_ok());
    }

    #[test]
    fn mds_exhaustive_7_4() {
        let g = make_generator(7, 4).unwrap();
        let report = verify_mds(&g, DEFAULT_MDS_BUDGET, 42);
        assert!(report.exhaustive);
        assert_eq!(report.subsets_checked, 330);
        assert_eq!(report.failure_count, 0);
    }

    #[test]
    fn mds_exhaustive_6_5() {
        let g = make_generator(6, 5).unwrap();
        let report = verify_mds(&g, DEFAULT_MDS_BUDGET, 42);
        assert!(report.exhaustive);
        assert_eq!(report.subsets_checked, 462);
        assert_eq!(report.failure_count, 0);
    }

    #[test]
    fn mds_sampled_when_over_budget() {
        let g = make_generator(20, 10).unwrap();
        // C(30,10) is about 30 million
        let report = verify_mds(&g, 500, 7);
        assert!(!report.exhaustive);
        assert_eq!(report.subsets_checked, 500);
        assert_eq!(report.failure_count, 0);
    }

    #[test]
    fn corrupted_generator_detected() {
        let mut g = make_generator(7, 4).unwrap();
        g.rows[5] = g.rows[6].clone(); // duplicate parity row
        let report = verify_mds(&g, DEFAULT_MDS_BUDGET, 9);
        assert!(report.failure_count >= 1);
        assert!(!report.failures.is_empty());
    }

    #[test]
    fn k1_chunks_are_scalar_multiples() {
        let g = make_generator(3, 1).unwrap();
        let payload = vec![7u8, 130, 255, 1];
        let coded = encode(&g, 0, &payload).unwrap();
        assert_eq!(coded.chunk(0), payload.as_slice());
        for idx in 1..4 {
            let coeff = g.row(idx)[0];
            let expect: Vec<u8> = payload
                .iter()
                .map(|&b| coeff.mul(FieldElement(b)).0)
                .collect();
            assert_eq!(coded.chunk(idx), expect.as_slice());
        }
    }

    #[test]
    fn systematic_chunks_are_stripes() {
        let g = make_generator(7, 4).unwrap();
        let payload: Vec<u8> = (0..100).collect();
        let coded = encode(&g, 0, &payload).unwrap();
        assert_eq!(coded.chunk_len, 25);
        for s in 0..4 {
            assert_eq!(coded.chunk(s), &payload[s * 25..(s + 1) * 25]);
        }
    }

    #[test]
    fn round_trip_all_subsets_7_4() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = make_generator(7, 4).unwrap();
        let payload: Vec<u8> = (0..4096).map(|_| rng.gen()).collect();
        let coded = encode(&g, 0, &payload).unwrap();
        // every 4-subset of the 11 chunks reconstructs the payload
        for a in 0..11 {
            for b in a + 1..11 {
                for c in b + 1..11 {
                    for d in c + 1..11 {
                        let chunks = [
                            (a, coded.chunk(a)),
                            (b, coded.chunk(b)),
                            (c, coded.chunk(c)),
                            (d, coded.chunk(d)),
                        ];
                        let got = decode(&g, &chunks, payload.len()).unwrap();
                        assert_eq!(got, payload);
                    }
                }
            }
        }
    }

    #[test]
    fn decode_rejects_duplicates_and_bad_counts() {
        let g = make_generator(7, 4).unwrap();
        let payload = vec![1u8; 64];
        let coded = encode(&g, 0, &payload).unwrap();
        let dup = [
            (0, coded.chunk(0)),
            (0, coded.chunk(0)),
            (1, coded.chunk(1)),
            (2, coded.chunk(2)),
        ];
        assert_eq!(
            decode(&g, &dup, 64).unwrap_err(),
            CodingError::DuplicateRow { index: 0 }
        );
        let short = [(0, coded.chunk(0))];
        assert!(matches!(
            decode(&g, &short, 64).unwrap_err(),
            CodingError::WrongChunkCount { .. }
        ));
    }

    #[test]
    fn payload_padding_round_trip() {
        let g = make_generator(6, 5).unwrap();
        // length 7 is not a multiple of k=5, so stripes carry zero padding
        let payload = vec![9u8, 8, 7, 6, 5, 4, 3];
        let coded = encode(&g, 0, &payload).unwrap();
        assert_eq!(coded.chunk_len, 2);
        let chunks: Vec<(usize, &[u8])> = (6..11).map(|i| (i, coded.chunk(i))).collect();
        assert_eq!(decode(&g, &chunks, payload.len()).unwrap(), payload);
    }

    #[test]
    fn encode_rejects_empty_payload() {
        let g = make_generator(2, 1).unwrap();
        assert_eq!(encode(&g, 0, &[]).unwrap_err(), CodingError::EmptyPayload);
    }

    #[test]
    fn encode_is_linear_over_xor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = make_generator(5, 3).unwrap();
        let x: Vec<u8> = (0..60).map(|_| rng.gen()).collect();
        let y: Vec<u8> = (0..60).map(|_| rng.gen()).collect();
        let xy: Vec<u8> = x.iter().zip(&y).map(|(a, b)| a ^ b).collect();
        let cx = encode(&g, 0, &x).unwrap();
        let cy = encode(&g, 0, &y).unwrap();
        let cxy = encode(&g, 0, &xy).unwrap();
        for idx in 0..g.num_rows() {
            let mixed: Vec<u8> = cx
                .chunk(idx)
                .iter()
                .zip(cy.chunk(idx))
                .map(|(a, b)| a ^ b)
                .collect();
            assert_eq!(cxy.chunk(idx), mixed.as_slice());
        }
    }

    #[test]
    fn roles_follow_d_without_reencoding() {
        let g = make_generator(7, 4).unwrap();
        let payload = vec![3u8; 32];
        let coded = encode(&g, 9, &payload).unwrap();
        assert_eq!(coded.role(0, 0), ChunkRole::Server);
        assert_eq!(coded.role(6, 0), ChunkRole::Server);
        assert_eq!(coded.role(7, 0), ChunkRole::CacheReserve);
        assert_eq!(coded.role(7, 1), ChunkRole::CacheActive);
        assert_eq!(coded.role(8, 1), ChunkRole::CacheReserve);
        assert_eq!(coded.role(10, 4), ChunkRole::CacheActive);
        // payloads do not depend on d
        let again = encode(&g, 9, &payload).unwrap();
        assert_eq!(coded, again);
    }

    #[test]
    fn prime_field_checker_on_known_matrices() {
        // identity extended by one all-ones row is MDS over any prime field
        let rows = vec![
            vec![1, 0, 0],
            vec![0, 1, 0],
            vec![0, 0, 1],
            vec![1, 1, 1],
        ];
        let report = verify_mds_prime(&rows, 17);
        assert_eq!(report.subsets_checked, 4);
        assert!(report.passed());

        // a repeated row is never MDS
        let dup = vec![vec![1, 0], vec![1, 0], vec![0, 1]];
        let report = verify_mds_prime(&dup, 17);
        assert_eq!(report.failure_count, 1);
        assert_eq!(report.failures[0], vec![0, 1]);
    }

    #[test]
    fn bundled_prime_example_has_two_singular_subsets() {
        // rows 6 and 7 restricted to coordinates {0,1} are both (1,2), so
        // {2,3,4,6,7} is singular over any field; the minor of rows 5,6,7 on
        // coordinates {0,3,4} is 17, so {1,2,5,6,7} is singular mod 17 only
        let rows = prime_example_rows();
        let report = verify_mds_prime(&rows, 17);
        assert_eq!(report.subsets_checked, 56);
        assert_eq!(report.failure_count, 2);
        assert_eq!(report.failures[0], vec![1, 2, 5, 6, 7]);
        assert_eq!(report.failures[1], vec![2, 3, 4, 6, 7]);
        // the mod-17 failure disappears in a larger prime field
        let report = verify_mds_prime(&rows, 10007);
        assert_eq!(report.failure_count, 1);
        assert_eq!(report.failures[0], vec![2, 3, 4, 6, 7]);
    }
}
