#![no_main]

use causal_dep::io::{graph_from_json, graph_to_dot, graph_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = graph_from_json(text) {
        let again = graph_from_json(&graph_to_json(&g)).expect("written graphs parse");
        assert_eq!(again, g);
        let _ = graph_to_dot(&g);
        let _ = g.is_chain_graph();
    }
});
