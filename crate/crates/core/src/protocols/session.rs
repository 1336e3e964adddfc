use std::sync::Arc;
use std::thread;

use crate::dealer::SharedDealer;
use crate::error::{Error, Result};
use crate::ring::FixedPointConfig;
use crate::transport::{local_mesh, Endpoint, RoundLedger, Topology};

use super::Party;

/// Results and ledgers of every compute party of a finished session.
#[derive(Debug)]
pub struct SessionOutput<T> {
    pub results: Vec<T>,
    pub ledgers: Vec<RoundLedger>,
}

impl<T> SessionOutput<T> {
    /// Party 0's ledger; all compute parties run the same rounds.
    pub fn ledger(&self) -> &RoundLedger {
        &self.ledgers[0]
    }
}

/// Picks the most informative error: disconnects and timeouts are usually
/// consequences of a failure elsewhere.
pub(crate) fn first_root_error(errors: Vec<Error>) -> Error {
    let mut fallback = None;
    for e in errors {
        match e {
            Error::Disconnected(_) | Error::Timeout { .. } => {
                fallback.get_or_insert(e);
            }
            other => return other,
        }
    }
    fallback.unwrap_or_else(|| Error::Panicked("no error recorded".into()))
}

pub(crate) fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".into()
    }
}

/// Runs `f` on every compute party of a fresh in-process session, each on its
/// own thread, with an on-demand dealer seeded by `seed`.
pub fn run_compute<T, F>(
    parties: usize,
    seed: u64,
    fx: FixedPointConfig,
    f: F,
) -> Result<SessionOutput<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let dealer = SharedDealer::new(seed, parties, fx);
    run_compute_with(parties, seed, fx, &dealer, f)
}

pub fn run_compute_with<T, F>(
    parties: usize,
    seed: u64,
    fx: FixedPointConfig,
    dealer: &Arc<SharedDealer>,
    f: F,
) -> Result<SessionOutput<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let topology = Topology::new(parties)?;
    let endpoints: Vec<Endpoint> = local_mesh(topology, seed).into_iter().take(parties).collect();
    let outcomes: Vec<Result<(T, RoundLedger)>> = thread::scope(|s| {
        let handles: Vec<_> = endpoints
            .into_iter()
            .enumerate()
            .map(|(i, ep)| {
                let f = &f;
                let handle = dealer.handle(i);
                s.spawn(move || -> Result<(T, RoundLedger)> {
                    let mut party = Party::new(ep, Box::new(handle), fx, seed)?;
                    let out = f(&mut party)?;
                    let ledger = party.ledger().clone();
                    Ok((out, ledger))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| Err(Error::Panicked(panic_message(p)))))
            .collect()
    });
    let mut results = Vec::new();
    let mut ledgers = Vec::new();
    let mut errors = Vec::new();
    for o in outcomes {
        match o {
            Ok((r, l)) => {
                results.push(r);
                ledgers.push(l);
            }
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(first_root_error(errors));
    }
    Ok(SessionOutput { results, ledgers })
}
