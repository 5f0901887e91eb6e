//! Stacks, heaps and the bounded domain they live in.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, ParseError};
use crate::num::Q;
use crate::syntax::VarName;

/// What happens when an allocation finds no free block inside `1..A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum ExhaustionPolicy {
    /// Report an address-space-exhausted error.
    #[default]
    Error,
    /// Treat the allocation as a memory fault.
    Fault,
}

/// The bounded model: variables, value interval `[vmin, vmax]`, addresses `1..=addrs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DomainConfig {
    pub vars: Vec<VarName>,
    pub vmin: i64,
    pub vmax: i64,
    pub addrs: usize,
    pub loop_max_iters: usize,
    pub loop_tol: Q,
    #[serde(default)]
    pub exhaustion: ExhaustionPolicy,
}

impl DomainConfig {
    pub fn new(vars: &[&str], vmin: i64, vmax: i64, addrs: usize) -> Result<DomainConfig, ModelError> {
        let cfg = DomainConfig {
            vars: vars.iter().map(|v| v.to_string()).collect(),
            vmin,
            vmax,
            addrs,
            loop_max_iters: 10_000,
            loop_tol: Q::new(1, 1_000_000),
            exhaustion: ExhaustionPolicy::Error,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The default small model used by the law suite.
    pub fn tiny() -> DomainConfig {
        DomainConfig::new(&["x", "y"], -1, 4, 3).expect("valid tiny model")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.vars.is_empty() {
            return bad("at least one variable is required".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for v in &self.vars {
            if !seen.insert(v) {
                return bad(format!("duplicate variable `{v}`"));
            }
        }
        if self.vmin > 0 || self.vmax < 0 {
            return bad(format!("value interval [{}, {}] must contain 0", self.vmin, self.vmax));
        }
        if self.addrs == 0 {
            return bad("need at least one address".into());
        }
        if self.addrs as i64 > self.vmax {
            return bad(format!("addresses 1..{} must be storable values (vmax = {})", self.addrs, self.vmax));
        }
        if self.addrs > 62 {
            return bad("at most 62 addresses are supported".into());
        }
        if self.loop_max_iters == 0 {
            return bad("loop_max_iters must be positive".into());
        }
        if self.loop_tol.is_negative() {
            return bad("loop_tol must be nonnegative".into());
        }
        Ok(())
    }

    pub fn with_vars(&self, vars: &[&str]) -> DomainConfig {
        DomainConfig { vars: vars.iter().map(|v| v.to_string()).collect(), ..self.clone() }
    }

    pub fn value_count(&self) -> usize {
        (self.vmax - self.vmin + 1) as usize
    }

    pub fn values(&self) -> impl Iterator<Item = i64> + Clone {
        self.vmin..=self.vmax
    }

    pub fn in_domain(&self, v: i64) -> bool {
        self.vmin <= v && v <= self.vmax
    }

    pub fn is_address(&self, v: i64) -> bool {
        v >= 1 && v <= self.addrs as i64
    }

    pub fn check_value(&self, v: i64, context: &str) -> Result<i64, ModelError> {
        if self.in_domain(v) {
            Ok(v)
        } else {
            Err(ModelError::ValueDomainExceeded { value: v, vmin: self.vmin, vmax: self.vmax, context: context.into() })
        }
    }
}

impl fmt::Display for DomainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "vars={} vmin={} vmax={} addrs={} loop_max_iters={} loop_tol={}",
            self.vars.join(","),
            self.vmin,
            self.vmax,
            self.addrs,
            self.loop_max_iters,
            self.loop_tol
        )?;
        if self.exhaustion == ExhaustionPolicy::Fault {
            write!(f, " exhaustion=fault")?;
        }
        Ok(())
    }
}

impl FromStr for DomainConfig {
    type Err = ParseError;

    /// Parses `vars=x,y vmin=-2 vmax=6 addrs=4 loop_max_iters=10000 loop_tol=1/1000000`.
    /// Missing keys take the defaults of the tiny model.
    fn from_str(text: &str) -> Result<DomainConfig, ParseError> {
        let mut cfg = DomainConfig::tiny();
        for item in text.split_whitespace() {
            let (key, value) =
                item.split_once('=').ok_or_else(|| ParseError::msg(format!("expected key=value, got `{item}`")))?;
            let int = |v: &str| v.parse::<i64>().map_err(|_| ParseError::msg(format!("invalid integer for {key}: `{v}`")));
            match key {
                "vars" => cfg.vars = value.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect(),
                "vmin" => cfg.vmin = int(value)?,
                "vmax" => cfg.vmax = int(value)?,
                "addrs" => cfg.addrs = int(value)?.max(0) as usize,
                "loop_max_iters" => cfg.loop_max_iters = int(value)?.max(0) as usize,
                "loop_tol" => cfg.loop_tol = value.parse()?,
                "exhaustion" => {
                    cfg.exhaustion = match value {
                        "error" => ExhaustionPolicy::Error,
                        "fault" => ExhaustionPolicy::Fault,
                        other => return Err(ParseError::msg(format!("unknown exhaustion policy `{other}`"))),
                    }
                }
                other => return Err(ParseError::msg(format!("unknown config key `{other}`"))),
            }
        }
        cfg.validate().map_err(|e| ParseError::msg(e.to_string()))?;
        Ok(cfg)
    }
}

/// Total valuation of program variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct Stack(pub BTreeMap<VarName, i64>);

impl Stack {
    pub fn new() -> Stack {
        Stack(BTreeMap::new())
    }

    pub fn from_pairs(pairs: &[(&str, i64)]) -> Stack {
        Stack(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    pub fn get(&self, x: &str) -> Option<i64> {
        self.0.get(x).copied()
    }

    pub fn set(&mut self, x: &str, v: i64) {
        self.0.insert(x.to_string(), v);
    }

    pub fn with(&self, x: &str, v: i64) -> Stack {
        let mut s = self.clone();
        s.set(x, v);
        s
    }
}

impl fmt::Display for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Finite partial map from addresses to values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct Heap(pub BTreeMap<i64, i64>);

impl Heap {
    pub fn empty() -> Heap {
        Heap(BTreeMap::new())
    }

    pub fn from_cells(cells: &[(i64, i64)]) -> Heap {
        Heap(cells.iter().copied().collect())
    }

    pub fn get(&self, a: i64) -> Option<i64> {
        self.0.get(&a).copied()
    }

    pub fn contains(&self, a: i64) -> bool {
        self.0.contains_key(&a)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.0.iter().map(|(a, v)| (*a, *v))
    }

    pub fn addresses(&self) -> Vec<i64> {
        self.0.keys().copied().collect()
    }

    pub fn without(&self, a: i64) -> Heap {
        let mut h = self.clone();
        h.0.remove(&a);
        h
    }

    pub fn with(&self, a: i64, v: i64) -> Heap {
        let mut h = self.clone();
        h.0.insert(a, v);
        h
    }

    /// `self ⊆ other` as heaps.
    pub fn is_subheap_of(&self, other: &Heap) -> bool {
        self.0.iter().all(|(a, v)| other.0.get(a) == Some(v))
    }

    /// `other` with the cells of `self` removed; assumes `self ⊆ other`.
    pub fn complement_in(&self, other: &Heap) -> Heap {
        Heap(other.0.iter().filter(|(a, _)| !self.0.contains_key(a)).map(|(a, v)| (*a, *v)).collect())
    }
}

impl fmt::Display for Heap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(a, v)| format!("{a}:{v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProgState {
    pub stack: Stack,
    pub heap: Heap,
}

impl ProgState {
    pub fn new(stack: Stack, heap: Heap) -> ProgState {
        ProgState { stack, heap }
    }

    /// Checks totality on `cfg.vars` and that every stored value lies in V.
    pub fn validate(&self, cfg: &DomainConfig) -> Result<(), ModelError> {
        for v in &cfg.vars {
            let value = self.stack.get(v).ok_or_else(|| ModelError::UnknownVariable(v.clone()))?;
            cfg.check_value(value, &format!("stack variable {v}"))?;
        }
        for (a, v) in self.heap.cells() {
            if !cfg.is_address(a) {
                return Err(ModelError::InvalidConfig(format!("heap address {a} outside 1..{}", cfg.addrs)));
            }
            cfg.check_value(v, &format!("heap cell {a}"))?;
        }
        Ok(())
    }
}

impl fmt::Display for ProgState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}; heap={}", self.stack, self.heap)
    }
}

impl FromStr for ProgState {
    type Err = ParseError;

    /// Parses `x=1,y=0; heap=1:7,2:0`. Either part may be omitted.
    fn from_str(text: &str) -> Result<ProgState, ParseError> {
        let mut stack = Stack::new();
        let mut heap = Heap::empty();
        for part in text.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            if let Some(cells) = part.strip_prefix("heap=") {
                for cell in cells.split(',').map(str::trim).filter(|c| !c.is_empty()) {
                    let (a, v) =
                        cell.split_once(':').ok_or_else(|| ParseError::msg(format!("expected addr:value, got `{cell}`")))?;
                    let a: i64 = a.trim().parse().map_err(|_| ParseError::msg(format!("bad address `{a}`")))?;
                    let v: i64 = v.trim().parse().map_err(|_| ParseError::msg(format!("bad value `{v}`")))?;
                    if heap.0.insert(a, v).is_some() {
                        return Err(ParseError::msg(format!("address {a} listed twice")));
                    }
                }
            } else {
                for binding in part.split(',').map(str::trim).filter(|c| !c.is_empty()) {
                    let (x, v) = binding
                        .split_once('=')
                        .ok_or_else(|| ParseError::msg(format!("expected var=value, got `{binding}`")))?;
                    let v: i64 = v.trim().parse().map_err(|_| ParseError::msg(format!("bad value `{v}`")))?;
                    stack.set(x.trim(), v);
                }
            }
        }
        Ok(ProgState { stack, heap })
    }
}

/// `h1 ⋆ h2`; fails when the domains overlap.
pub fn disjoint_union(h1: &Heap, h2: &Heap) -> Result<Heap, ModelError> {
    let clash: Vec<i64> = h1.0.keys().filter(|a| h2.0.contains_key(a)).copied().collect();
    if !clash.is_empty() {
        return Err(ModelError::HeapOverlap(clash));
    }
    let mut out = h1.clone();
    out.0.extend(h2.0.iter().map(|(a, v)| (*a, *v)));
    Ok(out)
}

/// All ordered splits `(h1, h2)` with `h1 ⋆ h2 = h`, ordered by the bitmask of cells in `h1`.
pub fn heap_partitions(h: &Heap) -> Vec<(Heap, Heap)> {
    let cells: Vec<(i64, i64)> = h.cells().collect();
    let n = cells.len();
    (0u64..(1u64 << n))
        .map(|mask| {
            let mut left = Heap::empty();
            let mut right = Heap::empty();
            for (i, (a, v)) in cells.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    left.0.insert(*a, *v);
                } else {
                    right.0.insert(*a, *v);
                }
            }
            (left, right)
        })
        .collect()
}

/// All heaps over addresses `1..=A` with at most `max_cells` cells, by size then address set then values.
pub fn enumerate_heaps(cfg: &DomainConfig, max_cells: usize) -> Vec<Heap> {
    let max_cells = max_cells.min(cfg.addrs);
    let addrs: Vec<i64> = (1..=cfg.addrs as i64).collect();
    let values: Vec<i64> = cfg.values().collect();
    let mut out = Vec::new();
    for k in 0..=max_cells {
        for dom in combinations(&addrs, k) {
            let mut digits = vec![0usize; k];
            loop {
                out.push(Heap(dom.iter().zip(&digits).map(|(a, d)| (*a, values[*d])).collect()));
                // odometer over values
                let mut i = 0;
                while i < k {
                    digits[i] += 1;
                    if digits[i] < values.len() {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == k {
                    break;
                }
            }
        }
    }
    out
}

fn combinations(items: &[i64], k: usize) -> Vec<Vec<i64>> {
    if k == 0 {
        return vec![vec![]];
    }
    if items.len() < k {
        return vec![];
    }
    let mut out = Vec::new();
    for (i, first) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, *first);
            out.push(rest);
        }
    }
    out
}

/// All stacks over `cfg.vars`, the first variable varying fastest.
pub fn enumerate_stacks(cfg: &DomainConfig) -> Vec<Stack> {
    let values: Vec<i64> = cfg.values().collect();
    let n = cfg.vars.len();
    let mut out = Vec::new();
    let mut digits = vec![0usize; n];
    loop {
        out.push(Stack(cfg.vars.iter().zip(&digits).map(|(x, d)| (x.clone(), values[*d])).collect()));
        let mut i = 0;
        while i < n {
            digits[i] += 1;
            if digits[i] < values.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    out
}

/// Cartesian product of all stacks with `enumerate_heaps`.
pub fn enumerate_states(cfg: &DomainConfig, max_cells: usize) -> Vec<ProgState> {
    let heaps = enumerate_heaps(cfg, max_cells);
    let mut out = Vec::new();
    for s in enumerate_stacks(cfg) {
        for h in &heaps {
            out.push(ProgState::new(s.clone(), h.clone()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_config_string() {
        let cfg: DomainConfig = "vars=x,y,z vmin=-2 vmax=6 addrs=4 loop_max_iters=10000 loop_tol=1/1000000".parse().unwrap();
        assert_eq!(cfg.vars, vec!["x", "y", "z"]);
        assert_eq!((cfg.vmin, cfg.vmax, cfg.addrs), (-2, 6, 4));
        assert_eq!(cfg.loop_tol, Q::new(1, 1_000_000));
        assert_eq!(cfg.to_string().parse::<DomainConfig>().unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!("vmin=1".parse::<DomainConfig>().is_err());
        assert!("addrs=9 vmax=4".parse::<DomainConfig>().is_err());
        assert!("vars=x,x".parse::<DomainConfig>().is_err());
    }

    #[test]
    fn parses_state_literal() {
        let s: ProgState = "x=1,y=0; heap=1:7,2:0".parse().unwrap();
        assert_eq!(s.stack.get("x"), Some(1));
        assert_eq!(s.heap.get(2), Some(0));
        assert_eq!(s.to_string().parse::<ProgState>().unwrap(), s);
    }
}
