#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = gbfim::graph::parse_graph_json(text) {
        let back = gbfim::graph::parse_graph_json(&g.to_json()).expect("serialized graph reloads");
        assert_eq!(back.node_count(), g.node_count());
        assert_eq!(back.edges(), g.edges());
    }
});
