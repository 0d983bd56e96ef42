//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtrf_core::cfg::{Cfg, FlowTarget, InstrKind, ListingEntry, ProgramListing};
use rtrf_core::geometry::{RegisterFileGeometry, ValidatedGeometry};
use rtrf_core::recommend::score_path;

pub fn default_geom() -> ValidatedGeometry {
    RegisterFileGeometry::default().validate().unwrap()
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

/// Small random listing with a mix of control-flow kinds; all direct
/// targets point inside the listing, some branches and calls are left
/// indirect.
pub fn random_listing(seed: u64, max_len: usize, num_regs: u32) -> ProgramListing {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(1..=max_len);
    let addrs: Vec<u64> = (0..len).map(|i| 0x1000 + 4 * i as u64).collect();
    let mut entries = Vec::new();
    for (i, &address) in addrs.iter().enumerate() {
        let roll: f64 = rng.gen();
        let kind = if roll < 0.55 {
            InstrKind::Sequential
        } else if roll < 0.75 {
            InstrKind::CondBranch
        } else if roll < 0.85 {
            InstrKind::Branch
        } else if roll < 0.93 {
            InstrKind::Call
        } else {
            InstrKind::Return
        };
        let target = match kind {
            InstrKind::CondBranch => Some(addrs[rng.gen_range(0..len)]),
            InstrKind::Branch | InstrKind::Call => {
                if rng.gen_bool(0.8) {
                    Some(addrs[rng.gen_range(0..len)])
                } else {
                    None
                }
            }
            _ => None,
        };
        let reg_list = |rng: &mut ChaCha8Rng| -> Vec<u32> {
            (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(0..num_regs)).collect()
        };
        entries.push(ListingEntry {
            address,
            mnemonic: format!("op{i}"),
            sources: reg_list(&mut rng),
            dests: reg_list(&mut rng),
            kind,
            target,
        });
    }
    ProgramListing::from_entries(entries).expect("generated listings are well formed")
}

fn is_terminal(cfg: &Cfg, instr: usize) -> bool {
    let block = cfg.block_of_instr(instr);
    instr + 1 == cfg.blocks()[block].end_instr
        && cfg.block_edges(block).iter().all(|e| e.target == FlowTarget::Unknown)
}

/// Expected per-mode shift scores of one window by direct recursive
/// expansion with no pruning; the reference the beam search must match.
pub fn reference_scores(
    cfg: &Cfg,
    start: usize,
    window: usize,
    geom: &ValidatedGeometry,
) -> (f64, f64) {
    fn expand(
        cfg: &Cfg,
        geom: &ValidatedGeometry,
        path: &mut Vec<usize>,
        weight: f64,
        window: usize,
        acc: &mut (f64, f64),
    ) {
        let finish = |path: &[usize], weight: f64, acc: &mut (f64, f64)| {
            let (h, v) = score_path(cfg, path, geom).unwrap();
            acc.0 += weight * h as f64;
            acc.1 += weight * v as f64;
        };
        let last = *path.last().unwrap();
        if path.len() == window || is_terminal(cfg, last) {
            finish(path, weight, acc);
            return;
        }
        let block = cfg.block_of_instr(last);
        if last + 1 != cfg.blocks()[block].end_instr {
            path.push(last + 1);
            expand(cfg, geom, path, weight, window, acc);
            path.pop();
            return;
        }
        for edge in cfg.block_edges(block) {
            match edge.target {
                FlowTarget::Block(b) => {
                    path.push(cfg.blocks()[b].first_instr);
                    expand(cfg, geom, path, weight * edge.probability, window, acc);
                    path.pop();
                }
                FlowTarget::Unknown => finish(path, weight * edge.probability, acc),
            }
        }
    }

    if window == 0 {
        return (0.0, 0.0);
    }
    let mut acc = (0.0, 0.0);
    expand(cfg, geom, &mut vec![start], 1.0, window, &mut acc);
    acc
}
