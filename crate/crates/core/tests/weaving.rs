mod support;

use fsmforge::{generate, weave, ContractModel, Plugin, PluginConfig, Tag};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::*;

fn model(seed: u64) -> ContractModel {
    random_model(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn all_plugins(bits: u8) -> PluginConfig {
    let mut p = PluginConfig::none();
    for (i, plugin) in Plugin::ALL.into_iter().enumerate() {
        p.set(plugin, bits & (1 << i) != 0);
    }
    p
}

#[test]
fn blind_auction_overhead_is_additive() {
    assert_eq!(additivity_violations(&corpus_model("blind_auction.fsm")), Vec::<String>::new());
}

#[test]
fn fragments_concatenate() {
    let m = corpus_model("blind_auction.fsm");
    let frags = |p: PluginConfig| weave(&m.clone().with_plugins(p)).contract_fragments;
    let lock = frags(PluginConfig { locking: true, ..PluginConfig::none() });
    let count = frags(PluginConfig { counter: true, ..PluginConfig::none() });
    let both = frags(PluginConfig { locking: true, counter: true, ..PluginConfig::none() });
    assert_eq!(both, [lock, count].concat());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn additivity_holds(seed in any::<u64>()) {
        let m = model(seed);
        prop_assert!(additivity_violations(&m).is_empty());
    }

    #[test]
    fn chains_follow_canonical_order(seed in any::<u64>(), bits in 0u8..32) {
        let m = model(seed).with_plugins(all_plugins(bits));
        let w = weave(&m);
        let rank = |name: &str| match name {
            "locking" => 0,
            "timedTransitions" => 1,
            fsmforge::plugins::COUNTER_MODIFIER => 2,
            "onlyAdmin" => 3,
            _ => 4,
        };
        for t in &m.transitions {
            let chain = w.chain(&t.name).unwrap();
            if m.plugins.locking {
                prop_assert_eq!(chain.iter().next(), Some("locking"));
            }
            let ranks: Vec<_> = chain.iter().map(rank).collect();
            prop_assert!(ranks.windows(2).all(|r| r[0] < r[1]), "{:?}", chain);
            prop_assert_eq!(chain.contains("onlyAdmin"), m.plugins.access_control && t.has_tag(&Tag::Admin));
            prop_assert_eq!(
                chain.contains(&format!("event{}", t.name)),
                m.plugins.events && t.has_tag(&Tag::Event)
            );
        }
        for tt in &m.timed_transitions {
            prop_assert!(w.chain(&tt.name).is_none());
        }
    }

    #[test]
    fn counter_injects_first_parameter(seed in any::<u64>(), bits in 0u8..32) {
        let m = model(seed).with_plugins(all_plugins(bits));
        let text = generate(&weave(&m));
        for (name, lines) in function_blocks(&text) {
            let header = &lines[1];
            if m.plugins.counter {
                let prefix = format!("    function {name}(uint nextTransitionNumber");
                prop_assert!(header.starts_with(&prefix), "{}", header);
            } else {
                prop_assert!(!text.contains("nextTransitionNumber"));
            }
        }
    }

    #[test]
    fn plugin_declaration_order_is_irrelevant(seed in any::<u64>(), perm in Just(Plugin::ALL.to_vec()).prop_shuffle()) {
        let m = model(seed);
        let dsl = fsmforge::emit_dsl(&m);
        let listed: Vec<&str> = perm.iter().filter(|p| m.plugins.is_enabled(**p)).map(|p| p.as_str()).collect();
        let block = listed.iter().map(|p| format!("{p};")).collect::<Vec<_>>().join(" ");
        let start = dsl.find("    plugins {");
        prop_assume!(start.is_some());
        let start = start.unwrap();
        let end = start + dsl[start..].find('}').unwrap() + 1;
        let shuffled = format!("{}    plugins {{ {block} }}{}", &dsl[..start], &dsl[end..]);
        let again = fsmforge::parse_dsl(&shuffled).unwrap();
        prop_assert_eq!(generate(&weave(&again)), generate(&weave(&m)));
    }

    #[test]
    fn body_shape_follows_the_model(seed in any::<u64>(), bits in 0u8..32) {
        let m = model(seed).with_plugins(all_plugins(bits));
        let text = generate(&weave(&m));
        let blocks = function_blocks(&text);
        prop_assert_eq!(blocks.len(), m.transitions.len());
        for (t, (name, lines)) in m.transitions.iter().zip(&blocks) {
            prop_assert_eq!(&t.name, name);
            let open = lines.iter().position(|l| l == "    {").unwrap();
            let (head, body) = lines.split_at(open);
            prop_assert_eq!(head.iter().any(|l| l.trim() == "payable"), t.has_tag(&Tag::Payable));
            let returns = head.iter().find(|l| l.trim_start().starts_with("returns ("));
            if t.outputs.is_empty() {
                prop_assert!(returns.is_none());
            } else {
                let decls: Vec<String> = t.outputs.iter().map(|p| p.declaration()).collect();
                prop_assert_eq!(returns.unwrap().trim(), format!("returns ({})", decls.join(", ")));
            }
            let change = format!("        state = States.{};", t.to);
            prop_assert_eq!(body.iter().any(|l| *l == change), t.to != t.from);
        }
    }

    #[test]
    fn generation_is_pure(seed in any::<u64>(), bits in 0u8..32) {
        let m = model(seed).with_plugins(all_plugins(bits));
        prop_assert_eq!(generate(&weave(&m)), generate(&weave(&m.clone())));
    }
}
