//! Per-task supersamples, the meta-supersample and the selection variables
//! that split them into training and test parts.
//!
//! Rows and slots are 0-based internally. [`training_row_index`] exposes the
//! 1-based row map `i + r_i·N` as the external contract; `row_for_slot` is
//! its 0-based twin.

use std::fmt::Write as _;

use rand::Rng;

use crate::environment::{Dataset, TaskEnvironment, TaskId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `2N × 2M` binary matrix; row `k` holds `2M` i.i.d. samples of task
/// `row_tasks[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaSupersample {
    data: Vec<u8>,
    row_tasks: Vec<TaskId>,
    n: usize,
    m: usize,
}

impl MetaSupersample {
    pub fn from_rows(rows: Vec<Vec<u8>>, row_tasks: Vec<TaskId>) -> Result<Self> {
        if rows.is_empty() || !rows.len().is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!(
                "meta-supersample needs an even, nonzero row count, got {}",
                rows.len()
            )));
        }
        if row_tasks.len() != rows.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows but {} row tasks",
                rows.len(),
                row_tasks.len()
            )));
        }
        let width = rows[0].len();
        if width == 0 || !width.is_multiple_of(2) || rows.iter().any(|r| r.len() != width) {
            return Err(Error::ShapeMismatch(
                "rows must share an even, nonzero length".into(),
            ));
        }
        if rows.iter().flatten().any(|&z| z > 1) {
            return Err(Error::InvalidParameter("entries must be 0 or 1".into()));
        }
        Ok(Self {
            n: rows.len() / 2,
            m: width / 2,
            data: rows.concat(),
            row_tasks,
        })
    }

    /// Rows without task labels (every row attributed to task 0).
    pub fn from_binary_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        let tasks = vec![TaskId(0); rows.len()];
        Self::from_rows(rows, tasks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row_tasks(&self) -> &[TaskId] {
        &self.row_tasks
    }

    /// Row `k` (0-based, `k < 2N`).
    pub fn row(&self, k: usize) -> &[u8] {
        let w = 2 * self.m;
        &self.data[k * w..(k + 1) * w]
    }

    /// The row slot `slot` trains on when its environment bit is `r`.
    pub fn slot_row(&self, slot: usize, r: u8) -> &[u8] {
        self.row(row_for_slot(slot, r, self.n))
    }

    /// Fig.-1 style dump: `*` marks rows chosen by `r`, brackets mark the
    /// cells chosen by `s` within those rows.
    pub fn render_marked(&self, sel: &Selection) -> Result<String> {
        sel.check_shape(self.n, self.m)?;
        let mut marked = vec![vec![false; 2 * self.m]; 2 * self.n];
        for slot in 0..self.n {
            let row = row_for_slot(slot, sel.r[slot], self.n);
            for (j, &bit) in sel.s[slot].iter().enumerate() {
                marked[row][j + self.m * bit as usize] = true;
            }
        }
        let chosen: Vec<usize> = (0..self.n)
            .map(|slot| row_for_slot(slot, sel.r[slot], self.n))
            .collect();
        let mut out = String::new();
        for (k, cells) in marked.iter().enumerate() {
            out.push(if chosen.contains(&k) { '*' } else { ' ' });
            for (j, &hit) in cells.iter().enumerate() {
                let z = self.row(k)[j];
                if hit {
                    let _ = write!(out, " [{z}]");
                } else {
                    let _ = write!(out, "  {z} ");
                }
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Environment bits `r` (length N) and per-slot sample bits `s` (N × M).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Selection {
    r: Vec<u8>,
    s: Vec<Vec<u8>>,
}

impl Selection {
    pub fn new(r: Vec<u8>, s: Vec<Vec<u8>>) -> Result<Self> {
        if r.is_empty() || r.len() != s.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} environment bits but {} sample-bit rows",
                r.len(),
                s.len()
            )));
        }
        let m = s[0].len();
        if m == 0 || s.iter().any(|row| row.len() != m) {
            return Err(Error::ShapeMismatch(
                "sample-bit rows must share a nonzero length".into(),
            ));
        }
        if r.iter().chain(s.iter().flatten()).any(|&b| b > 1) {
            return Err(Error::InvalidParameter(
                "selection bits must be 0 or 1".into(),
            ));
        }
        Ok(Self { r, s })
    }

    /// Decodes `N(M+1)` bits from an integer: bit `i` is `r_i`, bit
    /// `N + i·M + j` is `s_i^j`. Used to enumerate every selection.
    pub fn from_index(index: u64, n: usize, m: usize) -> Self {
        let bit = |k: usize| ((index >> k) & 1) as u8;
        let r = (0..n).map(bit).collect();
        let s = (0..n)
            .map(|i| (0..m).map(|j| bit(n + i * m + j)).collect())
            .collect();
        Self { r, s }
    }

    /// Every one of the `2^{N(M+1)}` selections.
    pub fn enumerate(n: usize, m: usize) -> Result<impl Iterator<Item = Selection>> {
        let bits = n * (m + 1);
        if bits >= 63 {
            return Err(Error::InvalidParameter(format!(
                "cannot enumerate 2^{bits} selections"
            )));
        }
        Ok((0..1u64 << bits).map(move |idx| Selection::from_index(idx, n, m)))
    }

    pub fn r(&self) -> &[u8] {
        &self.r
    }

    pub fn s(&self) -> &[Vec<u8>] {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn m(&self) -> usize {
        self.s[0].len()
    }

    /// Entry-wise modulo-2 complement.
    pub fn complement(&self) -> Self {
        Self {
            r: self.r.iter().map(|b| 1 - b).collect(),
            s: self
                .s
                .iter()
                .map(|row| row.iter().map(|b| 1 - b).collect())
                .collect(),
        }
    }

    fn check_shape(&self, n: usize, m: usize) -> Result<()> {
        if self.n() != n || self.m() != m {
            return Err(Error::ShapeMismatch(format!(
                "selection is {}×{} but supersample is N={n}, M={m}",
                self.n(),
                self.m()
            )));
        }
        Ok(())
    }
}

pub fn build_meta_supersample<T: Scalar, R: Rng + ?Sized>(
    env: &TaskEnvironment<T>,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<MetaSupersample> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("N and M must be ≥ 1".into()));
    }
    let mut data = Vec::with_capacity(4 * n * m);
    let mut row_tasks = Vec::with_capacity(2 * n);
    for _ in 0..2 * n {
        let task = env.sample_task(rng);
        let row = env.sample_dataset(task, 2 * m, rng)?;
        data.extend_from_slice(row.samples());
        row_tasks.push(task);
    }
    Ok(MetaSupersample {
        data,
        row_tasks,
        n,
        m,
    })
}

pub fn sample_selection<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Selection> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("N and M must be ≥ 1".into()));
    }
    let mut bit = || u8::from(rng.gen::<bool>());
    let r = (0..n).map(|_| bit()).collect();
    let s = (0..n).map(|_| (0..m).map(|_| bit()).collect()).collect();
    Ok(Selection { r, s })
}

/// 1-based row map: task `i` with environment bit `r_i` trains on row
/// `i + r_i·N`.
pub fn training_row_index(i: usize, r_i: u8, n: usize) -> Result<usize> {
    if i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, max: n });
    }
    if r_i > 1 {
        return Err(Error::InvalidParameter("r_i must be 0 or 1".into()));
    }
    Ok(i + r_i as usize * n)
}

/// 0-based form of [`training_row_index`].
#[inline]
pub fn row_for_slot(slot: usize, r: u8, n: usize) -> usize {
    slot + r as usize * n
}

/// Picks entry `j + M·s_j` of a `2M` row for each `j < M`.
pub fn select_samples(row: &[u8], s: &[u8]) -> Result<Dataset> {
    if row.len() != 2 * s.len() {
        return Err(Error::ShapeMismatch(format!(
            "row of length {} cannot be split by {} selection bits",
            row.len(),
            s.len()
        )));
    }
    let m = s.len();
    Dataset::new(
        s.iter()
            .enumerate()
            .map(|(j, &bit)| row[j + m * (bit as usize & 1)])
            .collect(),
    )
}

/// Number of ones among the cells of `row` chosen by `s`, with `s` packed
/// as bits (`s_j` = bit `j`).
#[inline]
pub(crate) fn selected_ones_packed(row: &[u8], s_bits: u64, m: usize) -> usize {
    (0..m)
        .map(|j| row[j + m * ((s_bits >> j) & 1) as usize] as usize)
        .sum()
}

/// Dataset of slot `slot` for environment bit `r` and sample bits `s`.
pub fn slot_dataset(ss: &MetaSupersample, slot: usize, r: u8, s: &[u8]) -> Result<Dataset> {
    if slot >= ss.n {
        return Err(Error::IndexOutOfRange {
            index: slot + 1,
            max: ss.n,
        });
    }
    select_samples(ss.slot_row(slot, r), s)
}

/// The N meta-training datasets picked by `sel`.
pub fn meta_training_set(ss: &MetaSupersample, sel: &Selection) -> Result<Vec<Dataset>> {
    sel.check_shape(ss.n, ss.m)?;
    (0..ss.n)
        .map(|slot| select_samples(ss.slot_row(slot, sel.r[slot]), &sel.s[slot]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::RandomStream;

    /// Fig.-1 supersample with cell (row k, column j) encoded as a distinct
    /// label so selections can be read off; entries themselves are binary so
    /// the labels live in a side table.
    fn fig1_labels() -> Vec<Vec<(usize, usize)>> {
        (1..=4).map(|k| (1..=4).map(|j| (k, j)).collect()).collect()
    }

    fn select_labels(row: &[(usize, usize)], s: &[u8]) -> Vec<(usize, usize)> {
        let m = s.len();
        s.iter()
            .enumerate()
            .map(|(j, &b)| row[j + m * b as usize])
            .collect()
    }

    #[test]
    fn row_index_examples() {
        assert_eq!(training_row_index(1, 0, 2).unwrap(), 1);
        assert_eq!(training_row_index(2, 1, 2).unwrap(), 4);
        assert_eq!(training_row_index(3, 0, 5).unwrap(), 3);
        assert!(matches!(
            training_row_index(0, 0, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(training_row_index(3, 0, 2).is_err());
    }

    #[test]
    fn row_index_pair_covers_both_rows() {
        for n in 1..6 {
            for i in 1..=n {
                let a = training_row_index(i, 0, n).unwrap();
                let b = training_row_index(i, 1, n).unwrap();
                assert_ne!(a, b);
                let mut got = [a, b];
                got.sort();
                assert_eq!(got, [i, i + n]);
            }
        }
    }

    #[test]
    fn fig1_golden_selection() {
        // r = (0,1), s1 = (0,1), s2 = (1,1) selects {{Z_1^1, Z_1^4}, {Z_4^3, Z_4^4}}.
        let labels = fig1_labels();
        let r = [0u8, 1];
        let s = [vec![0u8, 1], vec![1u8, 1]];
        let picked: Vec<Vec<(usize, usize)>> = (0..2)
            .map(|slot| {
                let row = training_row_index(slot + 1, r[slot], 2).unwrap() - 1;
                select_labels(&labels[row], &s[slot])
            })
            .collect();
        assert_eq!(picked, vec![vec![(1, 1), (1, 4)], vec![(4, 3), (4, 4)]]);
    }

    #[test]
    fn meta_training_set_on_fig1_values() {
        let rows = vec![
            vec![1, 0, 0, 1],
            vec![0, 0, 0, 0],
            vec![1, 1, 1, 1],
            vec![0, 1, 1, 0],
        ];
        let ss = MetaSupersample::from_binary_rows(rows).unwrap();
        let sel = Selection::new(vec![0, 1], vec![vec![0, 1], vec![1, 1]]).unwrap();
        let sets = meta_training_set(&ss, &sel).unwrap();
        // Z_1^1, Z_1^4 = 1, 1 ; Z_4^3, Z_4^4 = 1, 0
        assert_eq!(sets[0].samples(), &[1, 1]);
        assert_eq!(sets[1].samples(), &[1, 0]);
        let dump = ss.render_marked(&sel).unwrap();
        assert_eq!(dump.lines().count(), 4);
        assert!(dump.lines().next().unwrap().starts_with('*'));
        assert!(dump.lines().nth(3).unwrap().starts_with('*'));
        assert!(dump.lines().nth(1).unwrap().starts_with(' '));
    }

    #[test]
    fn select_samples_examples() {
        let row = [1u8, 0, 0, 1];
        assert_eq!(select_samples(&row, &[0, 1]).unwrap().samples(), &[1, 1]);
        assert_eq!(select_samples(&row, &[0, 0]).unwrap().samples(), &[1, 0]);
        assert_eq!(select_samples(&row, &[1, 1]).unwrap().samples(), &[0, 1]);
        assert!(matches!(
            select_samples(&row, &[0, 1, 1]),
            Err(Error::ShapeMismatch(_))
        ));
        assert_eq!(selected_ones_packed(&row, 0b10, 2), 2);
    }

    #[test]
    fn all_zero_selection_takes_leading_block() {
        let rows: Vec<Vec<u8>> = (0..6)
            .map(|k| (0..6).map(|j| ((k + j) % 2) as u8).collect())
            .collect();
        let ss = MetaSupersample::from_binary_rows(rows.clone()).unwrap();
        let sel = Selection::new(vec![0; 3], vec![vec![0; 3]; 3]).unwrap();
        let sets = meta_training_set(&ss, &sel).unwrap();
        for (i, d) in sets.iter().enumerate() {
            assert_eq!(d.samples(), &rows[i][..3]);
        }
    }

    #[test]
    fn shapes_and_determinism() {
        let env = TaskEnvironment::<f64>::reference();
        let ss = build_meta_supersample(&env, 2, 2, &mut RandomStream::from_seed(4)).unwrap();
        assert_eq!((ss.n(), ss.m(), ss.row_tasks().len()), (2, 2, 4));
        assert_eq!(ss.row(3).len(), 4);
        let again = build_meta_supersample(&env, 2, 2, &mut RandomStream::from_seed(4)).unwrap();
        assert_eq!(ss, again);
        let tiny = build_meta_supersample(&env, 1, 1, &mut RandomStream::from_seed(9)).unwrap();
        assert_eq!(
            tiny,
            build_meta_supersample(&env, 1, 1, &mut RandomStream::from_seed(9)).unwrap()
        );

        let zero = TaskEnvironment::<f64>::single_task(0.0).unwrap();
        let ss = build_meta_supersample(&zero, 3, 4, &mut RandomStream::from_seed(1)).unwrap();
        assert!((0..6).all(|k| ss.row(k).iter().all(|&z| z == 0)));
    }

    #[test]
    fn selection_shape_and_complement() {
        let sel = sample_selection(2, 2, &mut RandomStream::from_seed(3)).unwrap();
        assert_eq!(sel.r().len(), 2);
        assert_eq!(sel.s().iter().map(Vec::len).sum::<usize>(), 4);
        assert_eq!(sel.complement().complement(), sel);
        assert_eq!(Selection::enumerate(2, 2).unwrap().count(), 64);
    }

    #[test]
    fn selection_bits_are_fair() {
        let mut rng = RandomStream::from_seed(99);
        let draws = 1_000_000;
        let mut ones = [0usize; 3];
        for _ in 0..draws {
            let sel = sample_selection(1, 2, &mut rng).unwrap();
            ones[0] += sel.r()[0] as usize;
            ones[1] += sel.s()[0][0] as usize;
            ones[2] += sel.s()[0][1] as usize;
        }
        for c in ones {
            assert!((c as f64 / draws as f64 - 0.5).abs() <= 0.0015);
        }
    }
}
