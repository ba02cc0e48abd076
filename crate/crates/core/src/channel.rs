//! The adversarial break channel.
//!
//! A cut "after bit `p`" splits a string between its `p`-th and `(p+1)`-th
//! bits (1-based), so valid cuts lie in `[1, n - 1]`. The channel returns
//! the fragments as an unordered multiset, stored sorted. Attack strategies
//! choose cut positions and are looked up by name in a registry.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::bits::BitString;
use crate::encoder::Codec;
use crate::{seeded_rng, SeededRng};

/// Largest codeword the exhaustive search accepts.
pub const EXHAUSTIVE_MAX_LEN: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChannelError {
    #[error("cut after bit {cut} is outside [1, {}]", .len.saturating_sub(1))]
    CutOutOfRange { cut: usize, len: usize },
    #[error("cut after bit {0} appears twice")]
    DuplicateCut(usize),
    #[error("{cuts} cuts exceed the budget of {t}")]
    TooManyCuts { cuts: usize, t: usize },
    #[error("unknown attack strategy {0:?}")]
    UnknownStrategy(String),
    #[error("strategy {0:?} is already registered")]
    DuplicateStrategy(String),
    #[error("exhaustive search needs n <= {EXHAUSTIVE_MAX_LEN}, got n = {0}")]
    TooLongForExhaustive(usize),
    #[error("strategy {0:?} needs the code layout")]
    MissingLayout(&'static str),
    #[error("drop threshold {threshold} exceeds the signature length {l}")]
    ThresholdTooLarge { threshold: usize, l: usize },
}

/// Ascending, distinct cut positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BreakPattern {
    cuts: Vec<usize>,
}

impl BreakPattern {
    /// Validates cuts for a string of length `len`; input order is irrelevant.
    pub fn new(mut cuts: Vec<usize>, len: usize) -> Result<Self, ChannelError> {
        cuts.sort_unstable();
        if let Some(w) = cuts.windows(2).find(|w| w[0] == w[1]) {
            return Err(ChannelError::DuplicateCut(w[0]));
        }
        if let Some(&cut) = cuts.iter().find(|&&c| c == 0 || c >= len) {
            return Err(ChannelError::CutOutOfRange { cut, len });
        }
        Ok(Self { cuts })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn check_budget(&self, t: usize) -> Result<(), ChannelError> {
        if self.cuts.len() > t {
            return Err(ChannelError::TooManyCuts {
                cuts: self.cuts.len(),
                t,
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for BreakPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.cuts.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

/// An unordered multiset of oriented fragments, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FragmentMultiset {
    fragments: Vec<BitString>,
}

impl FragmentMultiset {
    pub fn new(mut fragments: Vec<BitString>) -> Self {
        fragments.sort();
        Self { fragments }
    }

    pub fn fragments(&self) -> &[BitString] {
        &self.fragments
    }

    pub fn into_fragments(self) -> Vec<BitString> {
        self.fragments
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn total_bits(&self) -> usize {
        self.fragments.iter().map(|f| f.len()).sum()
    }
}

impl FromIterator<BitString> for FragmentMultiset {
    fn from_iter<I: IntoIterator<Item = BitString>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Fragments in their true left-to-right order (for harness assertions).
pub fn break_ordered(c: &BitString, pattern: &BreakPattern) -> Vec<BitString> {
    let mut out = Vec::with_capacity(pattern.len() + 1);
    let mut start = 0;
    for &cut in pattern.cuts() {
        out.push(c.slice(start..cut));
        start = cut;
    }
    out.push(c.slice(start..c.len()));
    out
}

pub fn break_at(c: &BitString, pattern: &BreakPattern) -> Result<FragmentMultiset, ChannelError> {
    if let Some(&cut) = pattern.cuts().last() {
        if cut >= c.len() {
            return Err(ChannelError::CutOutOfRange { cut, len: c.len() });
        }
    }
    Ok(FragmentMultiset::new(break_ordered(c, pattern)))
}

/// Removes every fragment shorter than `threshold` bits (`threshold <= L`).
pub fn drop_short(frags: &FragmentMultiset, threshold: usize, l: usize) -> Result<FragmentMultiset, ChannelError> {
    if threshold > l {
        return Err(ChannelError::ThresholdTooLarge { threshold, l });
    }
    Ok(FragmentMultiset::new(
        frags.fragments.iter().filter(|f| f.len() >= threshold).cloned().collect(),
    ))
}

/// Decides whether the decoder fails on a fragment multiset.
pub type Judge<'a> = &'a (dyn Fn(&FragmentMultiset) -> bool + Sync);

/// What an attacker sees.
#[derive(Clone, Copy)]
pub struct AttackContext<'a> {
    pub codeword: &'a BitString,
    /// Cut budget.
    pub t: usize,
    /// Code layout, for strategies that aim at structure.
    pub codec: Option<&'a Codec>,
    /// Failure oracle for the exhaustive search.
    pub judge: Option<Judge<'a>>,
}

impl<'a> AttackContext<'a> {
    pub fn new(codeword: &'a BitString, codec: &'a Codec) -> Self {
        Self {
            codeword,
            t: codec.params().t as usize,
            codec: Some(codec),
            judge: None,
        }
    }

    fn codec(&self, strategy: &'static str) -> Result<&'a Codec, ChannelError> {
        self.codec.ok_or(ChannelError::MissingLayout(strategy))
    }
}

/// A named way of choosing break positions.
pub trait AttackStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn choose(&self, ctx: &AttackContext<'_>, rng: &mut SeededRng) -> Result<BreakPattern, ChannelError>;
}

/// Strategies by name.
#[derive(Default)]
pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Box<dyn AttackStrategy>>,
}

impl StrategyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The five built-in strategies.
    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        for s in [
            Box::new(Uniform) as Box<dyn AttackStrategy>,
            Box::new(SignatureTarget),
            Box::new(MarkerTarget),
            Box::new(BoundaryTarget),
            Box::new(ExhaustiveWorst),
        ] {
            reg.register(s).expect("built-in names are distinct");
        }
        reg
    }

    /// Shared registry of the built-in strategies.
    pub fn builtins() -> &'static StrategyRegistry {
        static REGISTRY: OnceLock<StrategyRegistry> = OnceLock::new();
        REGISTRY.get_or_init(Self::with_builtins)
    }

    pub fn register(&mut self, strategy: Box<dyn AttackStrategy>) -> Result<(), ChannelError> {
        let name = strategy.name();
        if self.strategies.contains_key(name) {
            return Err(ChannelError::DuplicateStrategy(name.to_string()));
        }
        self.strategies.insert(name, strategy);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&dyn AttackStrategy, ChannelError> {
        self.strategies
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| ChannelError::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.strategies.keys().copied()
    }

    /// Runs strategy `name` with a generator seeded from `seed`.
    pub fn attack(&self, name: &str, ctx: &AttackContext<'_>, seed: u64) -> Result<BreakPattern, ChannelError> {
        let strategy = self.get(name)?;
        let pattern = strategy.choose(ctx, &mut seeded_rng(seed))?;
        pattern.check_budget(ctx.t)?;
        Ok(pattern)
    }
}

/// Runs a built-in strategy.
pub fn attack(name: &str, ctx: &AttackContext<'_>, seed: u64) -> Result<BreakPattern, ChannelError> {
    StrategyRegistry::builtins().attack(name, ctx, seed)
}

/// `count` distinct cuts drawn uniformly from `range` (clamped to valid cuts).
fn cuts_in(range: std::ops::Range<usize>, len: usize, count: usize, rng: &mut SeededRng) -> Vec<usize> {
    let lo = range.start.max(1);
    let hi = range.end.min(len);
    if hi <= lo {
        return Vec::new();
    }
    let span = hi - lo;
    sample(rng, span, count.min(span)).into_iter().map(|i| lo + i).collect()
}

/// `t` cuts uniformly at random without replacement.
pub struct Uniform;

impl AttackStrategy for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn description(&self) -> &'static str {
        "t distinct cut positions drawn uniformly"
    }

    fn choose(&self, ctx: &AttackContext<'_>, rng: &mut SeededRng) -> Result<BreakPattern, ChannelError> {
        let n = ctx.codeword.len();
        BreakPattern::new(cuts_in(1..n, n, ctx.t, rng), n)
    }
}

/// One cut strictly inside each of up to `t` distinct level-0 signatures
/// (including `m_0`); any budget left over is spent uniformly on the
/// information region.
pub struct SignatureTarget;

impl AttackStrategy for SignatureTarget {
    fn name(&self) -> &'static str {
        "signature-target"
    }

    fn description(&self) -> &'static str {
        "cuts inside distinct level-0 signatures of the information region"
    }

    fn choose(&self, ctx: &AttackContext<'_>, rng: &mut SeededRng) -> Result<BreakPattern, ChannelError> {
        let codec = ctx.codec(self.name())?;
        let l = codec.params().l();
        let start = codec.params().info_start();
        let n = ctx.codeword.len();
        let sigs: Vec<usize> = codec
            .mu()
            .scan(&ctx.codeword.as_slice()[start..])
            .into_iter()
            .map(|(pos, _)| start + pos)
            .collect();
        let chosen: Vec<usize> = sigs.choose_multiple(rng, ctx.t.min(sigs.len())).copied().collect();
        let mut cuts: Vec<usize> = chosen.iter().map(|&s| s + rng.gen_range(1..l)).collect();
        while cuts.len() < ctx.t && start + 1 < n {
            let c = rng.gen_range(start.max(1)..n);
            if !cuts.contains(&c) {
                cuts.push(c);
            }
        }
        BreakPattern::new(cuts, n)
    }
}

/// One cut inside a marker of each of up to `t` distinct redundancy strings.
pub struct MarkerTarget;

impl AttackStrategy for MarkerTarget {
    fn name(&self) -> &'static str {
        "marker-target"
    }

    fn description(&self) -> &'static str {
        "one cut inside a marker of each of up to t instrumented redundancy strings"
    }

    fn choose(&self, ctx: &AttackContext<'_>, rng: &mut SeededRng) -> Result<BreakPattern, ChannelError> {
        let codec = ctx.codec(self.name())?;
        let p = codec.params();
        let l = p.l();
        let strings = p.t as usize;
        let stride = l + p.chunk_len();
        let cuts = sample(rng, strings, ctx.t.min(strings))
            .into_iter()
            .map(|s| {
                let chunk = rng.gen_range(0..p.chunk_count());
                s * p.instrumented_len() + chunk * stride + rng.gen_range(1..l)
            })
            .collect();
        BreakPattern::new(cuts, ctx.codeword.len())
    }
}

/// Cuts clustered within a few signature lengths of the `m_0` transition.
pub struct BoundaryTarget;

impl AttackStrategy for BoundaryTarget {
    fn name(&self) -> &'static str {
        "boundary-target"
    }

    fn description(&self) -> &'static str {
        "cuts clustered around the redundancy/information transition"
    }

    fn choose(&self, ctx: &AttackContext<'_>, rng: &mut SeededRng) -> Result<BreakPattern, ChannelError> {
        let codec = ctx.codec(self.name())?;
        let l = codec.params().l();
        let start = codec.params().info_start();
        let n = ctx.codeword.len();
        let range = start.saturating_sub(2 * l)..start + 3 * l;
        BreakPattern::new(cuts_in(range, n, ctx.t, rng), n)
    }
}

/// Full enumeration of every pattern of at most `t` cuts on a short word.
/// With a judge, returns a pattern on which the decoder fails if one
/// exists; otherwise (or when none fails) a pattern minimising the longest
/// fragment, ties broken by the seed.
pub struct ExhaustiveWorst;

impl AttackStrategy for ExhaustiveWorst {
    fn name(&self) -> &'static str {
        "exhaustive-worst"
    }

    fn description(&self) -> &'static str {
        "search all patterns (n <= 24) for a decoder failure, else the finest shattering"
    }

    fn choose(&self, ctx: &AttackContext<'_>, rng: &mut SeededRng) -> Result<BreakPattern, ChannelError> {
        let n = ctx.codeword.len();
        if n > EXHAUSTIVE_MAX_LEN {
            return Err(ChannelError::TooLongForExhaustive(n));
        }
        let mut best: Vec<BreakPattern> = Vec::new();
        let mut best_longest = usize::MAX;
        let mut failing: Vec<BreakPattern> = Vec::new();
        for pattern in all_patterns(n, ctx.t) {
            let frags = break_ordered(ctx.codeword, &pattern);
            if let Some(judge) = ctx.judge {
                if judge(&FragmentMultiset::new(frags.clone())) {
                    failing.push(pattern.clone());
                }
            }
            let longest = frags.iter().map(|f| f.len()).max().unwrap_or(0);
            if longest < best_longest {
                best_longest = longest;
                best.clear();
            }
            if longest == best_longest {
                best.push(pattern);
            }
        }
        let pool = if failing.is_empty() { best } else { failing };
        Ok(pool.choose(rng).cloned().unwrap_or_default())
    }
}

/// Every pattern of at most `t` cuts on a string of length `n`, by size
/// then lexicographically.
pub fn all_patterns(n: usize, t: usize) -> Vec<BreakPattern> {
    let mut out = vec![BreakPattern::empty()];
    if n < 2 {
        return out;
    }
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..t {
        let mut next = Vec::new();
        for cuts in &frontier {
            let from = cuts.last().map_or(1, |&c| c + 1);
            for c in from..n {
                let mut v = cuts.clone();
                v.push(c);
                next.push(v);
            }
        }
        out.extend(next.iter().map(|c| BreakPattern { cuts: c.clone() }));
        frontier = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legit::sample_legit;
    use crate::params::Params;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn multiset(parts: &[&str]) -> FragmentMultiset {
        parts.iter().map(|p| bits(p)).collect()
    }

    #[test]
    fn reproduces_the_introductory_example() {
        let x = bits("0100011100");
        let listed = [
            multiset(&["0", "0", "1000", "1110"]),
            multiset(&["010", "00111", "00"]),
            multiset(&["01000", "11100"]),
        ];
        // recover the cut sets by enumeration
        let mut found = Vec::new();
        for target in &listed {
            let hits: Vec<BreakPattern> = all_patterns(10, 3)
                .into_iter()
                .filter(|p| &break_at(&x, p).unwrap() == target)
                .collect();
            assert!(!hits.is_empty());
            found.push(hits);
        }
        assert_eq!(found[0], vec![BreakPattern::new(vec![1, 5, 9], 10).unwrap()]);
        assert_eq!(found[1], vec![BreakPattern::new(vec![3, 8], 10).unwrap()]);
        assert_eq!(found[2], vec![BreakPattern::new(vec![5], 10).unwrap()]);
    }

    #[test]
    fn break_basics() {
        let c = bits("1011");
        assert_eq!(break_at(&c, &BreakPattern::empty()).unwrap(), multiset(&["1011"]));
        let all = BreakPattern::new(vec![3, 1, 2], 4).unwrap();
        assert_eq!(all.cuts(), &[1, 2, 3]);
        assert_eq!(break_at(&c, &all).unwrap(), multiset(&["1", "0", "1", "1"]));
        assert_eq!(BreakPattern::new(vec![2, 2], 4), Err(ChannelError::DuplicateCut(2)));
        assert_eq!(
            BreakPattern::new(vec![4], 4),
            Err(ChannelError::CutOutOfRange { cut: 4, len: 4 })
        );
        assert!(BreakPattern::new(vec![0], 4).is_err());
    }

    #[test]
    fn dropping_short_fragments() {
        let f = multiset(&["0", "0", "1000", "1110"]);
        assert_eq!(drop_short(&f, 0, 8).unwrap(), f);
        assert_eq!(drop_short(&f, 2, 8).unwrap(), multiset(&["1000", "1110"]));
        assert_eq!(
            drop_short(&f, 9, 8),
            Err(ChannelError::ThresholdTooLarge { threshold: 9, l: 8 })
        );
    }

    #[test]
    fn pattern_enumeration_counts() {
        // sum_{k<=3} C(9, k)
        assert_eq!(all_patterns(10, 3).len(), 1 + 9 + 36 + 84);
        assert_eq!(all_patterns(1, 3).len(), 1);
    }

    fn sample_codeword(m: u64, t: u64, seed: u64) -> (Codec, BitString) {
        let codec = Codec::new(Params::derive(m, t, 3).unwrap());
        let (z, _) = sample_legit(codec.params(), codec.mu(), seed).unwrap();
        let cw = codec.encode(&z).unwrap();
        (codec, cw)
    }

    #[test]
    fn strategies_are_deterministic_and_within_budget() {
        let (codec, cw) = sample_codeword(1024, 3, 1);
        let ctx = AttackContext::new(&cw, &codec);
        for name in ["uniform", "signature-target", "marker-target", "boundary-target"] {
            let a = attack(name, &ctx, 99).unwrap();
            assert_eq!(a, attack(name, &ctx, 99).unwrap(), "{name}");
            assert!(a.len() <= 3 && !a.is_empty(), "{name}");
            let frags = break_ordered(&cw, &a);
            assert_eq!(frags.len(), a.len() + 1);
            assert_eq!(BitString::concat(&frags.iter().collect::<Vec<_>>()), cw);
        }
        assert_eq!(
            attack("nope", &ctx, 1),
            Err(ChannelError::UnknownStrategy("nope".into()))
        );
        assert_eq!(
            attack("exhaustive-worst", &ctx, 1),
            Err(ChannelError::TooLongForExhaustive(cw.len()))
        );
    }

    #[test]
    fn signature_target_cuts_inside_signatures() {
        let (codec, cw) = sample_codeword(1 << 14, 3, 2);
        let l = codec.params().l();
        let start = codec.params().info_start();
        let sigs: Vec<usize> = codec.mu().scan(&cw.as_slice()[start..]).into_iter().map(|s| s.0 + start).collect();
        assert!(sigs.len() >= 3);
        for seed in 0..20 {
            let p = attack("signature-target", &AttackContext::new(&cw, &codec), seed).unwrap();
            assert_eq!(p.len(), 3);
            let mut hit = std::collections::BTreeSet::new();
            for &c in p.cuts() {
                let s = sigs.iter().find(|&&s| s < c && c < s + l).expect("cut inside a signature");
                hit.insert(*s);
            }
            assert_eq!(hit.len(), 3);
        }
    }

    #[test]
    fn marker_target_hits_distinct_strings() {
        let (codec, cw) = sample_codeword(1024, 4, 3);
        let inst = codec.params().instrumented_len();
        let p = attack("marker-target", &AttackContext::new(&cw, &codec), 5).unwrap();
        let strings: std::collections::BTreeSet<usize> = p.cuts().iter().map(|c| c / inst).collect();
        assert_eq!(strings.len(), 4);
        assert!(p.cuts().iter().all(|&c| c < codec.params().info_start()));
    }

    #[test]
    fn exhaustive_search_on_short_words() {
        let c = bits("0110100110010110");
        let ctx = AttackContext {
            codeword: &c,
            t: 3,
            codec: None,
            judge: None,
        };
        let p = attack("exhaustive-worst", &ctx, 1).unwrap();
        let longest = break_ordered(&c, &p).iter().map(|f| f.len()).max().unwrap();
        assert_eq!(longest, 4);
        // a judge that flags multisets containing "11"
        let judge = |f: &FragmentMultiset| f.fragments().iter().any(|x| x.to_string() == "11");
        let ctx = AttackContext {
            judge: Some(&judge),
            ..ctx
        };
        let p = attack("exhaustive-worst", &ctx, 2).unwrap();
        assert!(judge(&break_at(&c, &p).unwrap()));
    }

    struct Nothing;

    impl AttackStrategy for Nothing {
        fn name(&self) -> &'static str {
            "nothing"
        }
        fn description(&self) -> &'static str {
            "no cuts"
        }
        fn choose(&self, _: &AttackContext<'_>, _: &mut SeededRng) -> Result<BreakPattern, ChannelError> {
            Ok(BreakPattern::empty())
        }
    }

    #[test]
    fn custom_strategies_register_by_name() {
        let mut reg = StrategyRegistry::with_builtins();
        reg.register(Box::new(Nothing)).unwrap();
        assert_eq!(
            reg.register(Box::new(Nothing)),
            Err(ChannelError::DuplicateStrategy("nothing".into()))
        );
        let names: Vec<&str> = reg.names().collect();
        assert_eq!(
            names,
            ["boundary-target", "exhaustive-worst", "marker-target", "nothing", "signature-target", "uniform"]
        );
        let c = bits("0101");
        let ctx = AttackContext {
            codeword: &c,
            t: 1,
            codec: None,
            judge: None,
        };
        assert!(reg.attack("nothing", &ctx, 0).unwrap().is_empty());
        assert_eq!(
            reg.attack("signature-target", &ctx, 0),
            Err(ChannelError::MissingLayout("signature-target"))
        );
    }
}
