//! Finite partition of the percept space induced by a rule program's
//! literal thresholds.
//!
//! Each numeric field is cut at every threshold it is compared against.
//! Thresholds used with `<` / `>=` cut as `[t, ..)`; thresholds used with
//! `<=` / `>` additionally get a single-point segment `{t}`. Every
//! comparison is constant on every segment. Boolean fields split into
//! `{false, true}`. Cells are the cross product, enumerated in mixed-radix
//! order with the first dimension most significant.

use std::collections::BTreeMap;

use ordered::OrderedF64;

use super::ast::{Field, RuleSet, Valuation};

mod ordered {
    use std::cmp::Ordering;

    /// Total order over the finite literals that appear in rule programs.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct OrderedF64(pub f64);

    impl Eq for OrderedF64 {}

    impl PartialOrd for OrderedF64 {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }

    impl Ord for OrderedF64 {
        fn cmp(&self, other: &Self) -> Ordering {
            self.0.total_cmp(&other.0)
        }
    }
}

/// One interval of a numeric axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// The whole real line (an axis with no cuts).
    All,
    /// `(-inf, upper)`
    Below { upper: f64 },
    /// `{at}`
    Point { at: f64 },
    /// `(lower, upper)` or `[lower, upper)` when `closed_low`.
    Between { lower: f64, upper: f64, closed_low: bool },
    /// `(lower, inf)` or `[lower, inf)` when `closed_low`.
    Above { lower: f64, closed_low: bool },
}

impl Segment {
    /// Canonical representative: `t-1` below the lowest cut, `t+1` above the
    /// highest, midpoints in between, the value itself for point segments.
    pub fn representative(&self) -> f64 {
        match *self {
            Segment::All => 0.0,
            Segment::Below { upper } => upper - 1.0,
            Segment::Point { at } => at,
            Segment::Between { lower, upper, .. } => (lower + upper) / 2.0,
            Segment::Above { lower, .. } => lower + 1.0,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Segment::All => true,
            Segment::Below { upper } => x < upper,
            Segment::Point { at } => x == at,
            Segment::Between {
                lower,
                upper,
                closed_low,
            } => (x > lower || (closed_low && x == lower)) && x < upper,
            Segment::Above { lower, closed_low } => x > lower || (closed_low && x == lower),
        }
    }

    /// Maps `u` in `[0, 1)` to a point of the segment. Unbounded ends are
    /// sampled within 100 units of the nearest cut.
    pub fn sample(&self, u: f64) -> f64 {
        const SPAN: f64 = 100.0;
        match *self {
            Segment::All => SPAN * (2.0 * u - 1.0),
            Segment::Below { upper } => upper - SPAN * (1.0 - u),
            Segment::Point { at } => at,
            Segment::Between {
                lower,
                upper,
                closed_low,
            } => {
                let x = lower + (upper - lower) * u;
                if !closed_low && x <= lower {
                    (lower + upper) / 2.0
                } else {
                    x
                }
            }
            Segment::Above { lower, closed_low } => {
                let x = lower + SPAN * u;
                if !closed_low && x <= lower {
                    lower + 1.0
                } else {
                    x
                }
            }
        }
    }
}

/// A threshold on a numeric axis and whether it needs a point segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub at: f64,
    pub point: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dimension {
    Numeric { field: Field, segments: Vec<Segment> },
    Boolean { field: Field },
}

impl Dimension {
    pub fn field(&self) -> Field {
        match self {
            Dimension::Numeric { field, .. } | Dimension::Boolean { field } => *field,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Dimension::Numeric { segments, .. } => segments.len(),
            Dimension::Boolean { .. } => 2,
        }
    }

    /// Builds a numeric axis from its cuts (any order, duplicates merged).
    pub fn numeric(field: Field, cuts: &[Cut]) -> Dimension {
        let mut merged: BTreeMap<OrderedF64, bool> = BTreeMap::new();
        for c in cuts {
            *merged.entry(OrderedF64(c.at)).or_insert(false) |= c.point;
        }
        let cuts: Vec<Cut> = merged.into_iter().map(|(k, point)| Cut { at: k.0, point }).collect();
        let mut segments = Vec::new();
        match cuts.first() {
            None => segments.push(Segment::All),
            Some(first) => segments.push(Segment::Below { upper: first.at }),
        }
        for (i, cut) in cuts.iter().enumerate() {
            if cut.point {
                segments.push(Segment::Point { at: cut.at });
            }
            let closed_low = !cut.point;
            match cuts.get(i + 1) {
                Some(next) => segments.push(Segment::Between {
                    lower: cut.at,
                    upper: next.at,
                    closed_low,
                }),
                None => segments.push(Segment::Above {
                    lower: cut.at,
                    closed_low,
                }),
            }
        }
        Dimension::Numeric { field, segments }
    }

    /// Index of the segment containing `x` on a numeric axis.
    pub fn locate(&self, x: f64) -> Option<usize> {
        match self {
            Dimension::Numeric { segments, .. } => segments.iter().position(|s| s.contains(x)),
            Dimension::Boolean { .. } => None,
        }
    }
}

/// Enumerable cross product of per-field partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpace {
    dims: Vec<Dimension>,
    base: Valuation,
}

impl CellSpace {
    /// `base` supplies values for fields that have no dimension.
    pub fn new(dims: Vec<Dimension>, base: Valuation) -> CellSpace {
        CellSpace { dims, base }
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn base(&self) -> &Valuation {
        &self.base
    }

    pub fn dim_index(&self, field: Field) -> Option<usize> {
        self.dims.iter().position(|d| d.field() == field)
    }

    /// Total number of cells. Saturates instead of overflowing.
    pub fn len(&self) -> usize {
        self.dims.iter().fold(1usize, |acc, d| acc.saturating_mul(d.arity()))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-dimension coordinates of a cell index.
    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, dim) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % dim.arity();
            index /= dim.arity();
        }
        out
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.dims).fold(0, |acc, (c, d)| acc * d.arity() + c)
    }

    pub fn representative(&self, index: usize) -> Valuation {
        self.valuation_with(index, |seg| seg.representative())
    }

    /// A point of the cell chosen by `pick` per numeric segment.
    pub fn valuation_with(&self, index: usize, mut pick: impl FnMut(&Segment) -> f64) -> Valuation {
        let mut v = self.base;
        for (coord, dim) in self.coords(index).into_iter().zip(&self.dims) {
            match dim {
                Dimension::Numeric { field, segments } => v.set_number(*field, pick(&segments[coord])),
                Dimension::Boolean { field } => v.set_flag(*field, coord == 1),
            }
        }
        v
    }

    /// Cell index containing the valuation (fields without a dimension ignored).
    pub fn locate(&self, v: &Valuation) -> Option<usize> {
        let mut coords = Vec::with_capacity(self.dims.len());
        for dim in &self.dims {
            coords.push(match dim {
                Dimension::Numeric { field, .. } => dim.locate(v.number(*field))?,
                Dimension::Boolean { field } => usize::from(v.flag(*field)),
            });
        }
        Some(self.index_of(&coords))
    }
}

/// Cuts contributed by a rule program, per numeric field.
pub fn ruleset_cuts(rs: &RuleSet) -> BTreeMap<Field, Vec<Cut>> {
    let mut cuts: BTreeMap<Field, Vec<Cut>> = BTreeMap::new();
    for rule in &rs.rules {
        rule.condition.for_each_cmp(&mut |field, op, value| {
            cuts.entry(field).or_default().push(Cut {
                at: value,
                point: op.closed_at_threshold(),
            });
        });
    }
    cuts
}

/// The cell space over exactly the fields the program references.
pub fn partition_percepts(rs: &RuleSet) -> CellSpace {
    let referenced = rs.referenced_fields();
    let cuts = ruleset_cuts(rs);
    let mut dims = Vec::new();
    for field in Field::NUMERIC {
        if let Some(c) = cuts.get(&field) {
            dims.push(Dimension::numeric(field, c));
        }
    }
    for field in Field::BOOLEAN {
        if referenced.contains(&field) {
            dims.push(Dimension::Boolean { field });
        }
    }
    CellSpace::new(dims, Valuation::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_dsl::parse;

    #[test]
    fn one_threshold_one_boolean() {
        let rs =
            parse("rule a: when distance < 1.5 and contact do stop\nrule b: when always do hold_course\n").unwrap();
        assert_eq!(partition_percepts(&rs).len(), 4);
    }

    #[test]
    fn two_thresholds_two_booleans() {
        let rs = parse(
            "rule a: when distance < 1.5 and contact do stop\nrule b: when distance < 3.0 and voted_trip do turn_away\nrule c: when always do hold_course\n",
        )
        .unwrap();
        assert_eq!(partition_percepts(&rs).len(), 12);
    }

    #[test]
    fn single_boolean() {
        let rs = parse("rule a: when contact do stop\nrule b: when always do hold_course\n").unwrap();
        assert_eq!(partition_percepts(&rs).len(), 2);
    }

    #[test]
    fn catch_all_only_has_one_cell() {
        let rs = parse("rule a: when always do hold_course\n").unwrap();
        let space = partition_percepts(&rs);
        assert_eq!(space.len(), 1);
        assert!(space.dims().is_empty());
    }

    #[test]
    fn representatives_follow_the_canonical_rule() {
        let dim = Dimension::numeric(
            Field::Distance,
            &[Cut { at: 3.0, point: false }, Cut { at: 1.5, point: false }],
        );
        let Dimension::Numeric { segments, .. } = &dim else {
            unreachable!()
        };
        let reps: Vec<f64> = segments.iter().map(Segment::representative).collect();
        assert_eq!(reps, vec![0.5, 2.25, 4.0]);
    }

    #[test]
    fn closed_comparisons_get_point_segments() {
        let rs = parse("rule a: when distance <= 2 do stop\nrule b: when always do hold_course\n").unwrap();
        let space = partition_percepts(&rs);
        assert_eq!(space.len(), 3);
        let reps: Vec<f64> = (0..3)
            .map(|i| space.representative(i).number(Field::Distance))
            .collect();
        assert_eq!(reps, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn coords_round_trip() {
        let rs = parse(
            "rule a: when distance < 1.5 and contact do stop\nrule b: when distance < 3.0 and voted_trip do turn_away\nrule c: when always do hold_course\n",
        )
        .unwrap();
        let space = partition_percepts(&rs);
        for i in 0..space.len() {
            assert_eq!(space.index_of(&space.coords(i)), i);
            assert_eq!(space.locate(&space.representative(i)), Some(i));
        }
    }
}
