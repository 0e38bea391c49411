mod common;

use common::{brs_corpus, rdha_corpus};
use prsmc_core::rdha::validate;
use prsmc_core::syntax::{parse_brs, parse_rdha, print_rdha};

#[test]
fn corpus_systems_round_trip() {
    let corpus = brs_corpus();
    assert!(corpus.len() >= 20);
    for (name, b) in corpus {
        assert!(b.is_normal_form(), "{name}");
        assert_eq!(parse_brs(&b.to_string()).unwrap(), b, "{name}");
    }
}

#[test]
fn corpus_automata_round_trip() {
    let corpus = rdha_corpus();
    assert!(corpus.len() >= 3);
    for (name, r) in corpus {
        assert!(validate(&r).is_empty(), "{name}");
        assert_eq!(parse_rdha(&print_rdha(&r)).unwrap(), r, "{name}");
    }
}
