//! Ranking metrics, relevance-conditioned hit rates and the non-personalized
//! baselines.

mod baselines;
mod report;

pub use baselines::{baseline_hot, baseline_maxcov, click_counts};
pub use report::{MetricsReport, MetricsRow};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::{Error, ItemId, Result, UserId};

/// Items best first with their scores.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub user: UserId,
    items: Vec<ItemId>,
    scores: Vec<f64>,
}

impl RankedList {
    pub fn new(user: UserId, items: Vec<ItemId>, scores: Vec<f64>) -> Result<Self> {
        if items.len() != scores.len() {
            return Err(Error::Validation(format!("{} items but {} scores for `{user}`", items.len(), scores.len())));
        }
        if items.iter().collect::<BTreeSet<_>>().len() != items.len() {
            return Err(Error::Validation(format!("duplicate items in the list for `{user}`")));
        }
        if scores.iter().any(|s| s.is_nan()) || scores.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Validation(format!("scores for `{user}` are not non-increasing")));
        }
        Ok(RankedList { user, items, scores })
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn top(&self, k: usize) -> &[ItemId] {
        &self.items[..k.min(self.items.len())]
    }

    /// The same ranking served to another user.
    pub fn for_user(&self, user: UserId) -> RankedList {
        RankedList { user, ..self.clone() }
    }
}

/// Labels used for relevance-conditioned hits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemFacets {
    pub destination: String,
    pub category: String,
}

/// Ground truth for one test user.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCase {
    pub user: UserId,
    pub targets: BTreeMap<ItemId, ItemFacets>,
}

impl EvalCase {
    pub fn new(user: UserId, targets: BTreeMap<ItemId, ItemFacets>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Validation(format!("case `{user}` has no targets")));
        }
        Ok(EvalCase { user, targets })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// Over all (case, target) pairs.
    Micro,
    /// Per-case hit fraction, then averaged over cases.
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Condition {
    SameDestinationAndCategory,
    SameDestination,
    SameCategory,
}

impl Condition {
    pub const ALL: [Condition; 3] =
        [Condition::SameDestinationAndCategory, Condition::SameDestination, Condition::SameCategory];

    pub fn name(&self) -> &'static str {
        match self {
            Condition::SameDestinationAndCategory => "dest+cat",
            Condition::SameDestination => "dest",
            Condition::SameCategory => "cat",
        }
    }

    pub fn matches(&self, rec: &ItemFacets, target: &ItemFacets) -> bool {
        let dest = rec.destination == target.destination;
        let cat = rec.category == target.category;
        match self {
            Condition::SameDestinationAndCategory => dest && cat,
            Condition::SameDestination => dest,
            Condition::SameCategory => cat,
        }
    }
}

pub type ListsByUser = HashMap<UserId, RankedList>;

fn list_for<'a>(lists: &'a ListsByUser, case: &EvalCase) -> Result<&'a RankedList> {
    lists.get(&case.user).ok_or_else(|| Error::Eval(format!("no ranked list for user `{}`", case.user)))
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Eval("k must be at least 1".into()));
    }
    Ok(())
}

fn hits(list: &RankedList, case: &EvalCase, k: usize) -> usize {
    list.top(k).iter().filter(|i| case.targets.contains_key(*i)).count()
}

/// HR@k averaged over (case, target) pairs.
pub fn hr_at_k(cases: &[EvalCase], lists: &ListsByUser, k: usize) -> Result<f64> {
    hr_at_k_with(cases, lists, k, Averaging::Micro)
}

pub fn hr_at_k_with(cases: &[EvalCase], lists: &ListsByUser, k: usize, averaging: Averaging) -> Result<f64> {
    check_k(k)?;
    if cases.is_empty() {
        return Err(Error::Eval("no evaluation cases".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for case in cases {
        let h = hits(list_for(lists, case)?, case, k) as f64;
        match averaging {
            Averaging::Micro => {
                num += h;
                den += case.targets.len() as f64;
            }
            Averaging::Macro => {
                num += h / case.targets.len() as f64;
                den += 1.0;
            }
        }
    }
    Ok(num / den)
}

/// NDCG@k with binary gains, averaged over cases. The ideal DCG places every
/// target of the case at the top, whether or not they all fit in `k`, so the
/// value never decreases as `k` grows.
pub fn ndcg_at_k(cases: &[EvalCase], lists: &ListsByUser, k: usize) -> Result<f64> {
    check_k(k)?;
    if cases.is_empty() {
        return Err(Error::Eval("no evaluation cases".into()));
    }
    let mut total = 0.0;
    for case in cases {
        let list = list_for(lists, case)?;
        let dcg: f64 = list
            .top(k)
            .iter()
            .enumerate()
            .filter(|(_, i)| case.targets.contains_key(*i))
            .map(|(p, _)| 1.0 / ((p + 2) as f64).log2())
            .sum();
        let ideal: f64 = (0..case.targets.len()).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
        total += dcg / ideal;
    }
    Ok(total / cases.len() as f64)
}

/// Fraction of cases whose top-k holds at least one item satisfying
/// `condition` against any of the case's targets.
pub fn conditioned_hr(
    cases: &[EvalCase],
    lists: &ListsByUser,
    k: usize,
    condition: Condition,
    facets: &HashMap<ItemId, ItemFacets>,
) -> Result<f64> {
    check_k(k)?;
    if cases.is_empty() {
        return Err(Error::Eval("no evaluation cases".into()));
    }
    let mut hit_cases = 0usize;
    for case in cases {
        let list = list_for(lists, case)?;
        let mut hit = false;
        for item in list.top(k) {
            let rec =
                facets.get(item).ok_or_else(|| Error::Eval(format!("item `{item}` has no destination/category")))?;
            if case.targets.values().any(|t| condition.matches(rec, t)) {
                hit = true;
                break;
            }
        }
        hit_cases += hit as usize;
    }
    Ok(hit_cases as f64 / cases.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn facets(d: &str, c: &str) -> ItemFacets {
        ItemFacets { destination: d.into(), category: c.into() }
    }

    fn list(user: &str, items: &[&str]) -> RankedList {
        let n = items.len();
        RankedList::new(
            user.into(),
            items.iter().map(|i| ItemId::from(*i)).collect(),
            (0..n).map(|i| (n - i) as f64).collect(),
        )
        .unwrap()
    }

    fn case(user: &str, targets: &[&str]) -> EvalCase {
        EvalCase::new(user.into(), targets.iter().map(|t| (ItemId::from(*t), facets("d", "c"))).collect()).unwrap()
    }

    fn lists(ls: Vec<RankedList>) -> ListsByUser {
        ls.into_iter().map(|l| (l.user.clone(), l)).collect()
    }

    #[test]
    fn ranked_list_invariants() {
        assert!(RankedList::new("u".into(), vec!["a".into(), "a".into()], vec![2.0, 1.0]).is_err());
        assert!(RankedList::new("u".into(), vec!["a".into(), "b".into()], vec![1.0, 2.0]).is_err());
        assert!(RankedList::new("u".into(), vec!["a".into()], vec![]).is_err());
        assert!(RankedList::new("u".into(), vec!["a".into(), "b".into()], vec![1.0, 1.0]).is_ok());
        assert!(EvalCase::new("u".into(), BTreeMap::new()).is_err());
    }

    #[test]
    fn perfect_and_empty_rankings() {
        let l = lists(vec![list("u", &["t", "x", "y"])]);
        let c = [case("u", &["t"])];
        for k in 1..5 {
            assert_eq!(hr_at_k(&c, &l, k).unwrap(), 1.0);
            assert_eq!(ndcg_at_k(&c, &l, k).unwrap(), 1.0);
        }
        let miss = [case("u", &["z"])];
        assert_eq!(hr_at_k(&miss, &l, 3).unwrap(), 0.0);
        assert_eq!(ndcg_at_k(&miss, &l, 3).unwrap(), 0.0);
    }

    #[test]
    fn five_case_hand_count() {
        // Hits at k=3: u1 {a}, u2 {}, u3 {c, d}, u4 {e}, u5 {} out of 8 targets.
        let l = lists(vec![
            list("u1", &["a", "x", "y", "b"]),
            list("u2", &["x", "y", "z", "q"]),
            list("u3", &["c", "d", "x"]),
            list("u4", &["x", "e"]),
            list("u5", &["x", "y", "z", "f"]),
        ]);
        let c = [
            case("u1", &["a", "b"]),
            case("u2", &["q"]),
            case("u3", &["c", "d"]),
            case("u4", &["e"]),
            case("u5", &["f", "g"]),
        ];
        assert_eq!(hr_at_k(&c, &l, 3).unwrap(), 4.0 / 8.0);
        assert_eq!(hr_at_k(&c, &l, 4).unwrap(), 7.0 / 8.0);
        let macro3 = (0.5 + 0.0 + 1.0 + 1.0 + 0.0) / 5.0;
        assert!((hr_at_k_with(&c, &l, 3, Averaging::Macro).unwrap() - macro3).abs() < 1e-15);
    }

    #[test]
    fn ndcg_closed_forms() {
        let l = lists(vec![list("u", &["x", "y", "t", "z"])]);
        assert!((ndcg_at_k(&[case("u", &["t"])], &l, 3).unwrap() - 0.5).abs() < 1e-12);
        let l = lists(vec![list("u", &["x", "a", "y", "z", "b", "w"])]);
        let got = ndcg_at_k(&[case("u", &["a", "b"])], &l, 10).unwrap();
        let want = (1.0 / 3f64.log2() + 1.0 / 6f64.log2()) / (1.0 + 1.0 / 3f64.log2());
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn missing_list_names_the_user() {
        let err = hr_at_k(&[case("ghost", &["t"])], &ListsByUser::new(), 5).unwrap_err();
        assert!(err.to_string().contains("ghost"));
        assert!(matches!(ndcg_at_k(&[case("ghost", &["t"])], &ListsByUser::new(), 5), Err(Error::Eval(_))));
    }

    fn facet_map() -> HashMap<ItemId, ItemFacets> {
        [
            ("t1", "D1", "C1"),
            ("t2", "D2", "C2"),
            ("same_cat", "D9", "C1"),
            ("same_dest", "D1", "C9"),
            ("same_both", "D1", "C1"),
            ("none", "D8", "C8"),
        ]
        .into_iter()
        .map(|(i, d, c)| (ItemId::from(i), facets(d, c)))
        .collect()
    }

    fn fcase(user: &str, targets: &[&str]) -> EvalCase {
        let f = facet_map();
        EvalCase::new(user.into(), targets.iter().map(|t| (ItemId::from(*t), f[&ItemId::from(*t)].clone())).collect())
            .unwrap()
    }

    #[test]
    fn condition_semantics() {
        let f = facet_map();
        let c = [fcase("u", &["t1"])];
        let l = lists(vec![list("u", &["none", "same_cat"])]);
        assert_eq!(conditioned_hr(&c, &l, 2, Condition::SameCategory, &f).unwrap(), 1.0);
        assert_eq!(conditioned_hr(&c, &l, 2, Condition::SameDestination, &f).unwrap(), 0.0);
        assert_eq!(conditioned_hr(&c, &l, 1, Condition::SameCategory, &f).unwrap(), 0.0);
        let exact = lists(vec![list("u", &["t1"])]);
        for cond in Condition::ALL {
            assert_eq!(conditioned_hr(&c, &exact, 1, cond, &f).unwrap(), 1.0);
        }
        let unknown = lists(vec![list("u", &["mystery"])]);
        assert!(matches!(conditioned_hr(&c, &unknown, 1, Condition::SameCategory, &f), Err(Error::Eval(_))));
    }

    #[test]
    fn four_case_enumeration() {
        let f = facet_map();
        let c = [fcase("a", &["t1"]), fcase("b", &["t2"]), fcase("c", &["t1", "t2"]), fcase("d", &["t1"])];
        let l = lists(vec![
            list("a", &["same_dest", "none"]),
            list("b", &["same_both", "same_cat"]),
            list("c", &["none", "same_both"]),
            list("d", &["none", "same_cat", "same_dest"]),
        ]);
        // k=2. a: dest. b: nothing matches D2/C2. c: same_both vs t1 -> all three.
        // d: same_cat -> cat only; same_dest is past k.
        let expect = [
            (Condition::SameDestinationAndCategory, 1.0 / 4.0),
            (Condition::SameDestination, 2.0 / 4.0),
            (Condition::SameCategory, 2.0 / 4.0),
        ];
        for (cond, want) in expect {
            assert_eq!(conditioned_hr(&c, &l, 2, cond, &f).unwrap(), want, "{cond:?}");
        }
    }

    proptest! {
        #[test]
        fn metrics_are_monotone_bounded_and_pure(seed in any::<u64>()) {
            use rand::{seq::{IndexedRandom, SliceRandom}, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let items: Vec<String> = (0..15).map(|i| format!("I{i:02}")).collect();
            let mut cases = Vec::new();
            let mut ls = Vec::new();
            let mut f = HashMap::new();
            for it in &items {
                f.insert(ItemId::from(it.as_str()), facets(&format!("D{}", rng.random_range(0..3)), &format!("C{}", rng.random_range(0..3))));
            }
            for u in 0..rng.random_range(1..8) {
                let user = format!("u{u}");
                let mut order = items.clone();
                order.shuffle(&mut rng);
                let n = rng.random_range(1..4);
                let mut targets = BTreeMap::new();
                for t in items.choose_multiple(&mut rng, n) {
                    targets.insert(ItemId::from(t.as_str()), f[&ItemId::from(t.as_str())].clone());
                }
                cases.push(EvalCase::new(user.as_str().into(), targets).unwrap());
                let refs: Vec<&str> = order.iter().map(String::as_str).collect();
                ls.push(list(&user, &refs));
            }
            let l = lists(ls);
            let mut prev = (0.0, 0.0);
            for k in 1..=16 {
                let h = hr_at_k(&cases, &l, k).unwrap();
                let n = ndcg_at_k(&cases, &l, k).unwrap();
                prop_assert!(h >= prev.0 && n >= prev.1 - 1e-12 && n <= 1.0 + 1e-12);
                prop_assert_eq!(h, hr_at_k(&cases, &l, k).unwrap());
                let both = conditioned_hr(&cases, &l, k, Condition::SameDestinationAndCategory, &f).unwrap();
                let d = conditioned_hr(&cases, &l, k, Condition::SameDestination, &f).unwrap();
                let c = conditioned_hr(&cases, &l, k, Condition::SameCategory, &f).unwrap();
                prop_assert!(both <= d.min(c));
                prev = (h, n);
            }
        }
    }
}
