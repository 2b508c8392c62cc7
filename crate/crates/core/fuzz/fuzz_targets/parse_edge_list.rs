#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = gbfim::graph::parse_edge_list(text) {
        for e in g.edges() {
            assert!(e.u < e.v && e.v < g.node_count());
            assert!(e.w > 0.0 && e.w.is_finite());
        }
        let back = gbfim::graph::parse_graph_json(&g.to_json()).expect("serialized graph reloads");
        assert_eq!(back.edges(), g.edges());
    }
});
