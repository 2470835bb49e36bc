//! Node position features used by the adopter-position metric.

use cascadelab::graph::{node_position_features, Network, PositionOptions};

/// Two 5-cliques joined by one reciprocal bridge.
fn two_cliques() -> cascadelab::Result<Network> {
    let mut edges = Vec::new();
    for base in [0, 5] {
        for a in base..base + 5 {
            for b in base..base + 5 {
                if a != b {
                    edges.push((a, b, 1.0));
                }
            }
        }
    }
    edges.push((4, 5, 1.0));
    edges.push((5, 4, 1.0));
    Network::from_edges((0..10).map(|v| format!("n{v}")).collect(), edges)
}

fn main() -> cascadelab::Result<()> {
    let net = two_cliques()?;
    let features = node_position_features(&net, &PositionOptions::default())?;
    println!("{:>4} {:>9} {:>9} {:>9} {:>5}", "node", "pagerank", "eigen", "transit", "comm");
    for (v, f) in features.iter().enumerate() {
        println!(
            "{:>4} {:>9.4} {:>9.4} {:>9.4} {:>5}",
            net.id(v),
            f.pagerank,
            f.eigencentrality,
            f.transitivity,
            f.community
        );
    }
    Ok(())
}
