use std::fmt::Write as _;

/// Totals for one operation label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LedgerEntry {
    pub rounds: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
}

/// Per-label communication accounting for one node.
///
/// Entries keep the order in which labels were first used. Bytes count
/// payload only; frame headers are excluded so totals do not depend on the
/// backend.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundLedger {
    entries: Vec<(String, LedgerEntry)>,
}

impl RoundLedger {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&mut self, label: &str) -> &mut LedgerEntry {
        let idx = match self.entries.iter().position(|(l, _)| l == label) {
            Some(i) => i,
            None => {
                self.entries.push((label.to_string(), LedgerEntry::default()));
                self.entries.len() - 1
            }
        };
        &mut self.entries[idx].1
    }

    pub fn record_round(&mut self, label: &str, sent: u64, received: u64) {
        let e = self.slot(label);
        e.rounds += 1;
        e.bytes_sent += sent;
        e.bytes_received += received;
    }

    pub fn get(&self, label: &str) -> LedgerEntry {
        self.entries
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, e)| *e)
            .unwrap_or_default()
    }

    pub fn entries(&self) -> &[(String, LedgerEntry)] {
        &self.entries
    }

    pub fn total_rounds(&self) -> u64 {
        self.entries.iter().map(|(_, e)| e.rounds).sum()
    }

    pub fn total_bytes_sent(&self) -> u64 {
        self.entries.iter().map(|(_, e)| e.bytes_sent).sum()
    }

    pub fn total(&self) -> LedgerEntry {
        self.entries.iter().fold(LedgerEntry::default(), |acc, (_, e)| LedgerEntry {
            rounds: acc.rounds + e.rounds,
            bytes_sent: acc.bytes_sent + e.bytes_sent,
            bytes_received: acc.bytes_received + e.bytes_received,
        })
    }

    pub fn merge(&mut self, other: &RoundLedger) {
        for (label, e) in &other.entries {
            let s = self.slot(label);
            s.rounds += e.rounds;
            s.bytes_sent += e.bytes_sent;
            s.bytes_received += e.bytes_received;
        }
    }

    /// `operation,rounds,bytes` rows, bytes being payload bytes sent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("operation,rounds,bytes\n");
        for (label, e) in &self.entries {
            let _ = writeln!(out, "{},{},{}", label, e.rounds, e.bytes_sent);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulates_in_first_use_order() {
        let mut l = RoundLedger::new();
        l.record_round("mul", 16, 16);
        l.record_round("add", 0, 0);
        l.record_round("mul", 8, 8);
        assert_eq!(l.get("mul").rounds, 2);
        assert_eq!(l.get("mul").bytes_sent, 24);
        assert_eq!(l.total_rounds(), 3);
        assert_eq!(l.to_csv(), "operation,rounds,bytes\nmul,2,24\nadd,1,0\n");
        assert_eq!(l.get("missing"), LedgerEntry::default());
    }

    #[test]
    fn merge_adds() {
        let mut a = RoundLedger::new();
        a.record_round("x", 1, 2);
        let mut b = RoundLedger::new();
        b.record_round("x", 3, 4);
        b.record_round("y", 0, 0);
        a.merge(&b);
        assert_eq!(a.get("x").bytes_sent, 4);
        assert_eq!(a.get("y").rounds, 1);
    }
}
