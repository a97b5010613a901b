use bnmc::mtbdd::{BitVar, Manager, NodeRef, Op, VarOrder};
use proptest::prelude::*;

const VARS: usize = 4;

fn bits_of(i: usize) -> Vec<bool> {
    (0..VARS).map(|k| i >> (VARS - 1 - k) & 1 == 1).collect()
}

fn build(m: &mut Manager, table: &[f64]) -> NodeRef {
    let vars: Vec<BitVar> = (0..VARS as u32).map(BitVar).collect();
    m.from_fn(&vars, |b| {
        let i = b.iter().fold(0, |acc, &x| acc * 2 + usize::from(x));
        table[i]
    })
    .unwrap()
}

fn table_of(m: &Manager, r: NodeRef) -> Vec<f64> {
    (0..1 << VARS).map(|i| m.evaluate(r, &bits_of(i)).unwrap()).collect()
}

fn tables() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), Just(0.5), Just(1.0), 0.0f64..1.0], 1 << VARS)
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![Just(Op::Add), Just(Op::Mul), Just(Op::Min), Just(Op::Max)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn apply_is_pointwise(a in tables(), b in tables(), op in op()) {
        let mut m = Manager::new(VarOrder::numbered(VARS));
        let (ra, rb) = (build(&mut m, &a), build(&mut m, &b));
        let r = m.apply(op, ra, rb);
        let expected: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| op.eval(x, y)).collect();
        prop_assert_eq!(table_of(&m, r), expected);
        prop_assert!(m.is_reduced());
    }

    #[test]
    fn commutative_and_associative(a in tables(), b in tables(), c in tables(), op in op()) {
        let mut m = Manager::new(VarOrder::numbered(VARS));
        let (ra, rb, rc) = (build(&mut m, &a), build(&mut m, &b), build(&mut m, &c));
        prop_assert_eq!(m.apply(op, ra, rb), m.apply(op, rb, ra));
        if matches!(op, Op::Min | Op::Max) {
            let ab = m.apply(op, ra, rb);
            let bc = m.apply(op, rb, rc);
            prop_assert_eq!(m.apply(op, ab, rc), m.apply(op, ra, bc));
        }
    }

    #[test]
    fn caches_are_transparent(a in tables(), b in tables(), op in op()) {
        let mut m = Manager::new(VarOrder::numbered(VARS));
        let (ra, rb) = (build(&mut m, &a), build(&mut m, &b));
        let first = m.apply(op, ra, rb);
        m.clear_caches();
        prop_assert_eq!(m.apply(op, ra, rb), first);
    }

    #[test]
    fn build_is_canonical(a in tables()) {
        let mut m = Manager::new(VarOrder::numbered(VARS));
        let r1 = build(&mut m, &a);
        let r2 = build(&mut m, &a);
        prop_assert_eq!(r1, r2);
    }

    #[test]
    fn restrict_and_abstract_pointwise(a in tables(), var in 0u32..VARS as u32, value in any::<bool>()) {
        let mut m = Manager::new(VarOrder::numbered(VARS));
        let r = build(&mut m, &a);
        let rr = m.restrict(r, BitVar(var), value);
        let s = m.sum_abstract(r, &[BitVar(var)]);
        for i in 0..1 << VARS {
            let mut bits = bits_of(i);
            bits[var as usize] = value;
            let j = bits.iter().fold(0, |acc, &x| acc * 2 + usize::from(x));
            prop_assert_eq!(m.evaluate(rr, &bits_of(i)).unwrap(), a[j]);
            let mut lo = bits_of(i);
            lo[var as usize] = false;
            let mut hi = lo.clone();
            hi[var as usize] = true;
            let idx = |b: &[bool]| b.iter().fold(0, |acc, &x| acc * 2 + usize::from(x));
            let want = a[idx(&lo)] + a[idx(&hi)];
            prop_assert!((m.evaluate(s, &bits_of(i)).unwrap() - want).abs() <= 1e-12);
        }
        let all: Vec<BitVar> = (0..VARS as u32).map(BitVar).collect();
        let total = m.sum_abstract(r, &all);
        let want: f64 = a.iter().sum();
        prop_assert!((m.value(total).unwrap() - want).abs() <= 1e-12);
    }

    #[test]
    fn collect_keeps_roots(a in tables(), b in tables()) {
        let mut m = Manager::new(VarOrder::numbered(VARS));
        let ra = build(&mut m, &a);
        let _garbage = build(&mut m, &b);
        let moved = m.collect(&[ra]);
        prop_assert_eq!(table_of(&m, moved[0]), a.clone());
        prop_assert!(m.is_reduced());
        prop_assert_eq!(build(&mut m, &a), moved[0]);
    }
}

#[test]
fn sixteen_two_variable_functions() {
    let mut m = Manager::new(VarOrder::numbered(2));
    let vars = [BitVar(0), BitVar(1)];
    let mut refs: Vec<NodeRef> = (0..16u32)
        .map(|f| {
            m.from_fn(&vars, |b| f64::from(f >> (usize::from(b[0]) * 2 + usize::from(b[1])) & 1))
                .unwrap()
        })
        .collect();
    refs.sort();
    refs.dedup();
    assert_eq!(refs.len(), 16);
}
