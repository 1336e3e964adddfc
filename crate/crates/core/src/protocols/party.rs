use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::dealer::{Preprocessing, Request};
use crate::error::{Error, Result};
use crate::ring::{FixedPointConfig, RingElement};
use crate::sharing::{share_words, ArithmeticShare};
use crate::tensor::RingTensor;
use crate::transport::{bytes_to_words, words_to_bytes, Endpoint, PartyId, Role, RoundLedger};

const DEFAULT_LABEL: &str = "misc";

/// Runtime of one compute party: its network endpoint, its preprocessing
/// source and local randomness for sharing its own inputs.
pub struct Party {
    id: usize,
    parties: usize,
    fx: FixedPointConfig,
    net: Endpoint,
    pre: Box<dyn Preprocessing>,
    rng: ChaCha20Rng,
    scope: Option<String>,
}

impl Party {
    pub fn new(
        net: Endpoint,
        pre: Box<dyn Preprocessing>,
        fx: FixedPointConfig,
        seed: u64,
    ) -> Result<Self> {
        let me = net.id();
        if me.role != Role::Compute {
            return Err(Error::Role(format!("node {} is not a compute party", me.index)));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(1000 + me.index as u64);
        Ok(Party {
            id: me.index,
            parties: net.topology().parties(),
            fx,
            net,
            pre,
            rng,
            scope: None,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn fx(&self) -> FixedPointConfig {
        self.fx
    }

    pub fn is_leader(&self) -> bool {
        self.id == 0
    }

    pub fn endpoint(&mut self) -> &mut Endpoint {
        &mut self.net
    }

    pub fn ledger(&self) -> &RoundLedger {
        self.net.ledger()
    }

    pub fn rounds(&self) -> u64 {
        self.net.ledger().total_rounds()
    }

    pub fn into_endpoint(self) -> Endpoint {
        self.net
    }

    pub fn label(&self) -> &str {
        self.scope.as_deref().unwrap_or(DEFAULT_LABEL)
    }

    /// Runs `f` with rounds attributed to `label`, unless an enclosing scope
    /// already named the operation.
    pub fn scoped<T>(&mut self, label: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        if self.scope.is_some() {
            return f(self);
        }
        self.scope = Some(label.to_string());
        let out = f(self);
        self.scope = None;
        out
    }

    pub fn preprocessing(&mut self, request: Request) -> Result<Vec<u64>> {
        self.pre.next(&request)
    }

    pub fn consumed_items(&self) -> usize {
        self.pre.consumed()
    }

    /// Share of a public tensor: party 0 holds it.
    pub fn public(&self, t: RingTensor) -> ArithmeticShare {
        ArithmeticShare::public(self.id, t)
    }

    /// Public constant held by party 0, zero elsewhere.
    pub fn constant(&self, c: RingElement) -> RingElement {
        if self.id == 0 {
            c
        } else {
            RingElement::ZERO
        }
    }

    fn peers(&self) -> Vec<usize> {
        (0..self.parties).filter(|&q| q != self.id).collect()
    }

    /// One round in which every compute party sends `words` to every other;
    /// returns all parties' words indexed by party.
    pub fn broadcast_round(&mut self, words: &[u64]) -> Result<Vec<Vec<u64>>> {
        let peers = self.peers();
        let payload = words_to_bytes(words);
        let out: Vec<(usize, Vec<u8>)> = peers.iter().map(|&q| (q, payload.clone())).collect();
        let label = self.label().to_string();
        let got = self.net.exchange_round(&label, &out, &peers)?;
        let mut all = Vec::with_capacity(self.parties);
        let mut it = got.into_iter();
        for q in 0..self.parties {
            if q == self.id {
                all.push(words.to_vec());
            } else {
                let w = bytes_to_words(&it.next().unwrap())?;
                if w.len() != words.len() {
                    return Err(Error::Desync {
                        from: q,
                        to: self.id,
                        detail: format!("{} words, expected {}", w.len(), words.len()),
                    });
                }
                all.push(w);
            }
        }
        Ok(all)
    }

    /// Reveals an arithmetically shared vector to all compute parties.
    pub fn open(&mut self, share: &[RingElement]) -> Result<Vec<RingElement>> {
        let words: Vec<u64> = share.iter().map(|e| e.0).collect();
        let all = self.broadcast_round(&words)?;
        Ok((0..share.len())
            .map(|i| RingElement(all.iter().fold(0u64, |acc, w| acc.wrapping_add(w[i]))))
            .collect())
    }

    /// Reveals an XOR-shared vector to all compute parties.
    pub fn open_xor(&mut self, bits: &[u64]) -> Result<Vec<u64>> {
        let all = self.broadcast_round(bits)?;
        Ok((0..bits.len())
            .map(|i| all.iter().fold(0u64, |acc, w| acc ^ w[i]))
            .collect())
    }

    /// Sends this party's share to a node outside the compute set; only that
    /// node can reconstruct.
    pub fn open_to(&mut self, share: &[RingElement], recipient: PartyId) -> Result<()> {
        if recipient.role == Role::Compute {
            return Err(Error::Role(format!(
                "open_to target {} is a compute party",
                recipient.index
            )));
        }
        let words: Vec<u64> = share.iter().map(|e| e.0).collect();
        let label = self.label().to_string();
        self.net
            .exchange_round(&label, &[(recipient.index, words_to_bytes(&words))], &[])?;
        Ok(())
    }

    /// One round receiving shares from non-compute nodes (e.g. puller and
    /// receiver feeding the update).
    pub fn receive_from(&mut self, sources: &[usize]) -> Result<Vec<Vec<RingElement>>> {
        let label = self.label().to_string();
        let got = self.net.exchange_round(&label, &[], sources)?;
        got.into_iter()
            .map(|b| Ok(bytes_to_words(&b)?.into_iter().map(RingElement).collect()))
            .collect()
    }

    /// Every compute party secret-shares its private vector (`lens[q]` long
    /// for party `q`) in one round. Returns this party's share of each input.
    pub fn share_inputs(
        &mut self,
        mine: &[RingElement],
        lens: &[usize],
    ) -> Result<Vec<Vec<RingElement>>> {
        if lens.len() != self.parties || lens[self.id] != mine.len() {
            return Err(Error::Shape(format!(
                "input lengths {lens:?} do not match party {} holding {}",
                self.id,
                mine.len()
            )));
        }
        let secret: Vec<u64> = mine.iter().map(|e| e.0).collect();
        // shares[q] goes to party q; rotate so our own keeps the remainder
        let raw = share_words(&secret, self.parties, &mut self.rng);
        let mut shares: Vec<Vec<u64>> = vec![Vec::new(); self.parties];
        for (k, s) in raw.into_iter().enumerate() {
            shares[(self.id + k) % self.parties] = s;
        }
        let peers = self.peers();
        let out: Vec<(usize, Vec<u8>)> = peers
            .iter()
            .map(|&q| (q, words_to_bytes(&shares[q])))
            .collect();
        let label = self.label().to_string();
        let got = self.net.exchange_round(&label, &out, &peers)?;
        let mut it = got.into_iter();
        let mut result = Vec::with_capacity(self.parties);
        for q in 0..self.parties {
            let words = if q == self.id {
                std::mem::take(&mut shares[q])
            } else {
                bytes_to_words(&it.next().unwrap())?
            };
            if words.len() != lens[q] {
                return Err(Error::Desync {
                    from: q,
                    to: self.id,
                    detail: format!("input of {} words, expected {}", words.len(), lens[q]),
                });
            }
            result.push(words.into_iter().map(RingElement).collect());
        }
        Ok(result)
    }

    pub fn next_random(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// Secret-shares `values` from a non-compute node to all compute parties in
/// one round.
pub fn share_to_compute(
    ep: &mut Endpoint,
    label: &str,
    values: &[RingElement],
    rng: &mut impl RngCore,
) -> Result<()> {
    let n = ep.topology().parties();
    let secret: Vec<u64> = values.iter().map(|e| e.0).collect();
    let shares = share_words(&secret, n, rng);
    let out: Vec<(usize, Vec<u8>)> = shares
        .iter()
        .enumerate()
        .map(|(q, s)| (q, words_to_bytes(s)))
        .collect();
    ep.exchange_round(label, &out, &[])?;
    Ok(())
}

/// Receives one share from each compute party and reconstructs.
pub fn collect_from_compute(ep: &mut Endpoint, label: &str) -> Result<Vec<RingElement>> {
    let sources: Vec<usize> = (0..ep.topology().parties()).collect();
    let got = ep.exchange_round(label, &[], &sources)?;
    let mut acc: Option<Vec<u64>> = None;
    for b in got {
        let w = bytes_to_words(&b)?;
        acc = Some(match acc {
            None => w,
            Some(a) => {
                if a.len() != w.len() {
                    return Err(Error::Shape("share lengths differ".into()));
                }
                a.iter().zip(&w).map(|(x, y)| x.wrapping_add(*y)).collect()
            }
        });
    }
    Ok(acc.unwrap_or_default().into_iter().map(RingElement).collect())
}
