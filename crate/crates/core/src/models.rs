//! Bundled example models.

use std::fmt::Write;

/// Two states: `p` off, then on. `Set` has two instances.
pub const TOGGLE: &str = include_str!("../models/toggle.egs");

/// The hotel key-card model with 2 guests and one room with 3 keys.
pub const HOTEL_2_3: &str = include_str!("../models/hotel_2_3.egs");

/// A hotel configuration written `G[K1,K2,..]`: `G` guests and one room per
/// entry, each room owning `Ki` consecutive keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HotelConfig {
    pub guests: usize,
    pub keys_per_room: Vec<usize>,
}

impl HotelConfig {
    pub fn parse(s: &str) -> Option<Self> {
        let (g, rest) = s.split_once('[')?;
        let keys = rest.strip_suffix(']')?;
        let keys_per_room = keys
            .split(',')
            .map(|k| k.trim().parse().ok().filter(|&k: &usize| k > 0))
            .collect::<Option<Vec<_>>>()?;
        let guests = g.trim().parse().ok().filter(|&g: &usize| g > 0)?;
        Some(Self {
            guests,
            keys_per_room,
        })
    }

    pub fn num_keys(&self) -> usize {
        self.keys_per_room.iter().sum()
    }
}

impl std::fmt::Display for HotelConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let keys: Vec<String> = self.keys_per_room.iter().map(|k| k.to_string()).collect();
        write!(f, "{}[{}]", self.guests, keys.join(","))
    }
}

fn names(prefix: char, n: usize) -> String {
    (0..n)
        .map(|i| format!("{prefix}{i}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Source of the hotel model at `cfg`. Rooms own disjoint blocks of keys;
/// each room starts with its first key as both the last issued and the
/// current lock key.
pub fn hotel(cfg: &HotelConfig) -> String {
    let mut s = String::new();
    let rooms = cfg.keys_per_room.len();
    let _ = writeln!(s, "// Hotel key cards, configuration {cfg}.");
    let _ = writeln!(s, "model hotel\n");
    let _ = writeln!(s, "sort Guest = {{{}}}", names('g', cfg.guests));
    let _ = writeln!(s, "sort Room = {{{}}}", names('r', rooms));
    let _ = writeln!(s, "sort Key = {{{}}} ordered\n", names('k', cfg.num_keys()));
    s.push_str(
        "var keys[Room][Key]: bool
var gkeys[Guest][Key]: bool
var occupant[Room][Guest]: bool
var lastKey[Room]: Key
var current[Room]: Key

init {
  (forall g: Guest | forall k: Key | !gkeys[g][k])
  && (forall r: Room | forall g: Guest | !occupant[r][g])
",
    );
    let mut first = 0;
    for (r, &n) in cfg.keys_per_room.iter().enumerate() {
        let owned: Vec<String> = (0..cfg.num_keys())
            .map(|k| {
                let bang = if (first..first + n).contains(&k) {
                    ""
                } else {
                    "!"
                };
                format!("{bang}keys[r{r}][k{k}]")
            })
            .collect();
        let _ = writeln!(s, "  && {}", owned.join(" && "));
        let _ = writeln!(
            s,
            "  && lastKey[r{r}] == k{first} && current[r{r}] == k{first}"
        );
        first += n;
    }
    s.push_str(
        "}

event In(g: Guest, r: Room, k: Key) modifies gkeys, occupant, lastKey {
  guard: (forall h: Guest | !occupant[r][h]) && keys[r][k] && k == next(lastKey[r])
  effect:
    gkeys[g][k]' := true
    occupant[r][g]' := true
    lastKey[r]' := k
}

event Out(g: Guest) modifies occupant {
  guard: exists r: Room | occupant[r][g]
  effect: forall r: Room | occupant[r][g]' := false
}

event Entry(g: Guest, r: Room, k: Key) modifies current {
  guard: gkeys[g][k] && keys[r][k] && k == next(current[r])
  effect: current[r]' := k
}

event Reentry(g: Guest, r: Room, k: Key) {
  guard: gkeys[g][k] && keys[r][k] && k == current[r]
}

// Whoever opens an occupied room must be one of its occupants.
assert BadSafety {
  always forall r: Room | forall g: Guest | forall k: Key |
    ((@Entry[g, r, k] || @Reentry[g, r, k]) && (exists h: Guest | occupant[r][h]))
      -> occupant[r][g]
}
",
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::egs::{compile_lks, parse_model, CompileOptions};
    use crate::seltl::bind;

    #[test]
    fn config_syntax() {
        let c = HotelConfig::parse("3[1,3]").unwrap();
        assert_eq!(c.guests, 3);
        assert_eq!(c.keys_per_room, [1, 3]);
        assert_eq!(c.to_string(), "3[1,3]");
        assert!(HotelConfig::parse("3").is_none());
        assert!(HotelConfig::parse("0[2]").is_none());
        assert!(HotelConfig::parse("2[0]").is_none());
    }

    #[test]
    fn bundled_hotel_matches_generator() {
        let cfg = HotelConfig::parse("2[3]").unwrap();
        assert_eq!(HOTEL_2_3, hotel(&cfg));
    }

    #[test]
    fn hotel_2_3_compiles() {
        let sys = parse_model(HOTEL_2_3).unwrap();
        let opts = CompileOptions {
            add_idle: true,
            ..Default::default()
        };
        let m = compile_lks(&sys, opts).unwrap();
        assert!(m.lks.num_states() <= 1 << 12);
        assert!(m.lks.validate().is_empty());
        assert_eq!(m.lks.initial().len(), 1);
        assert_eq!(m.lks.type_names()[..4], ["In", "Out", "Entry", "Reentry"]);
        let f = m.assertion("BadSafety").unwrap();
        bind(&f, &m.lks).unwrap();
    }

    #[test]
    fn larger_configs_compile() {
        for c in ["2[1,3]", "3[2,2]", "3[1,3]"] {
            let src = hotel(&HotelConfig::parse(c).unwrap());
            let sys = parse_model(&src).unwrap();
            let opts = CompileOptions {
                add_idle: true,
                ..Default::default()
            };
            let m = compile_lks(&sys, opts).unwrap();
            assert!(m.lks.validate().is_empty(), "{c}");
            eprintln!("{c}: {} states", m.lks.num_states());
        }
    }
}
