use crossbeam_channel::unbounded;

use super::{Endpoint, Link, Topology};

/// Fully connected in-process mesh; one endpoint per node, in node order.
pub fn local_mesh(topology: Topology, session: u64) -> Vec<Endpoint> {
    let n = topology.nodes();
    // channel[i][j] carries frames from i to j
    let mut senders: Vec<Vec<Option<_>>> = (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
    let mut receivers: Vec<Vec<Option<_>>> =
        (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (tx, rx) = unbounded::<Vec<u8>>();
                senders[i][j] = Some(tx);
                receivers[j][i] = Some(rx);
            }
        }
    }
    (0..n)
        .map(|i| {
            let links = (0..n)
                .map(|j| {
                    if i == j {
                        None
                    } else {
                        Some(Link::new(
                            senders[i][j].take().unwrap(),
                            receivers[i][j].take().unwrap(),
                        ))
                    }
                })
                .collect();
            Endpoint::new(topology.node(i).unwrap(), topology, session, links, "local")
        })
        .collect()
}
