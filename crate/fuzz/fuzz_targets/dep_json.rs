#![no_main]

use causal_dep::depfind::check_consistency;
use causal_dep::io::{dep_from_json, dep_to_json, dsep_from_json, dsep_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let dep = dep_from_json(text);
    if let Ok(dep) = &dep {
        let again = dep_from_json(&dep_to_json(dep)).expect("written DEPs parse");
        assert_eq!(again.graph, dep.graph);
        assert_eq!(again.provenance, dep.provenance);
    }
    if let Ok(dsep) = dsep_from_json(text) {
        assert_eq!(dsep_from_json(&dsep_to_json(&dsep)).expect("written DSEPs parse"), dsep);
        if let Ok(dep) = &dep {
            // the same document read both ways describes one graph
            assert!(check_consistency(&dep.graph, &dsep.graph).expect("same vertex count").is_empty());
        }
    }
});
