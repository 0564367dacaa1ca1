//! Quick self-checks against independent oracles, run by `irsim validate`.

use irsim_core::hardware::{distortion_factor, lloyd_max};
use irsim_core::linalg::CVec;
use irsim_core::receivers::{conditional_sinr, daa_b_matrix, daa_full_matrix, daa_mmse, daa_target, du_mmse, mrc};
use irsim_core::{HardwareProfile, ReceiverKind, Resolution, SimOptions, System, SystemConfig};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, r: Result<(bool, String), irsim_core::Error>) -> Check {
    match r {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check { name, pass: false, detail: format!("error: {e}") },
    }
}

fn quantizer() -> Result<(bool, String), irsim_core::Error> {
    let mut worst: f64 = 0.0;
    for b in [1u32, 2, 4] {
        let table = distortion_factor(Resolution::Bits(b))?;
        let (_, mse) = lloyd_max(1 << b);
        worst = worst.max((table - mse).abs() / mse);
    }
    Ok((worst < 0.01, format!("max relative deviation {worst:.2e}")))
}

fn ideal_is_distortion_free(seed: u64) -> Result<(bool, String), irsim_core::Error> {
    let sys = System::build(&SystemConfig::desk(), &HardwareProfile::ideal(), seed)?;
    let out = sys.simulate(&SimOptions::new(64, &ReceiverKind::ALL, vec![3, 60]))?;
    let bad = out.breakdowns.iter().filter(|b| b.terms.dac + b.terms.trf + b.terms.rrf + b.terms.adc != 0.0).count();
    Ok((bad == 0, format!("{bad} nonzero distortion breakdowns")))
}

fn mui_closed_form(seed: u64) -> Result<(bool, String), irsim_core::Error> {
    let sys = System::build(&SystemConfig::desk(), &HardwareProfile::reference(), seed)?;
    let out = sys.simulate(&SimOptions::new(2000, &[ReceiverKind::Mrc], vec![3, 60]))?;
    let mut worst: f64 = 0.0;
    for b in &out.breakdowns {
        let cf = sys.mui_closed_form(ReceiverKind::Mrc, b.cell, b.user)?;
        worst = worst.max((b.terms.mui - cf).abs() / b.stderr.mui);
    }
    Ok((worst < 4.0, format!("worst deviation {worst:.2} standard errors")))
}

fn power_decomposition(seed: u64) -> Result<(bool, String), irsim_core::Error> {
    let sys = System::build(&SystemConfig::desk(), &HardwareProfile::reference(), seed)?;
    let mut opts = SimOptions::new(2000, &ReceiverKind::ALL, vec![3, 40]);
    opts.sample_received_power = true;
    let out = sys.simulate(&opts)?;
    let mut worst: f64 = 0.0;
    for b in &out.breakdowns {
        let pc = b.power.expect("requested");
        worst = worst.max(pc.diff.abs() / pc.diff_stderr);
    }
    Ok((worst < 4.0, format!("worst deviation {worst:.2} standard errors")))
}

fn receiver_ordering(seed: u64) -> Result<(bool, String), irsim_core::Error> {
    let sys = System::build(&SystemConfig::desk(), &HardwareProfile::reference(), seed)?;
    let lay = sys.layout;
    let mut violations = 0;
    for trial in 0..10 {
        let ts = sys.draw_trial(trial)?;
        for n in [3, 60] {
            let (t, tb) = sys.aging_at(n);
            for j in 0..lay.cells {
                let st = sys.bs_statics(j);
                let hats: Vec<&CVec> = (0..lay.ues()).map(|u| &ts.estimates[u * lay.cells + j]).collect();
                let full = daa_full_matrix(st, &hats, t, tb);
                for k in 0..lay.users {
                    let u = lay.ue(j, k);
                    let c = daa_target(st, hats[u], t);
                    let b = daa_b_matrix(&full, &c);
                    let daa = conditional_sinr(&daa_mmse(st, &hats, u, t, tb)?, &c, &b);
                    let du = conditional_sinr(&du_mmse(st, &hats, u)?, &c, &b);
                    let mr = conditional_sinr(&mrc(hats[u]), &c, &b);
                    if daa < du * (1.0 - 1e-12) || daa < mr * (1.0 - 1e-12) {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok((violations == 0, format!("{violations} orderings violated")))
}

fn block_determinism(seed: u64) -> Result<(bool, String), irsim_core::Error> {
    let sys = System::build(&SystemConfig::desk(), &HardwareProfile::reference(), seed)?;
    let mut opts = SimOptions::new(50, &ReceiverKind::ALL, vec![3, 60]);
    opts.block_size = 8;
    let serial = sys.simulate(&opts)?;
    let mut acc = sys.accumulator(&opts);
    for b in 0..opts.blocks() {
        acc.merge(&sys.simulate_block(&opts, b)?)?;
    }
    let merged = sys.finalize(&acc)?;
    Ok((serial == merged, "block merge against serial run".into()))
}

/// Runs every check. Takes a few seconds in release builds.
pub fn run_checks(seed: u64) -> Vec<Check> {
    vec![
        check("quantizer distortion vs Lloyd-Max iteration", quantizer()),
        check("ideal hardware has zero distortion terms", ideal_is_distortion_free(seed)),
        check("MRC MUI closed form vs Monte Carlo", mui_closed_form(seed)),
        check("received power equals the term sum", power_decomposition(seed)),
        check("conditional SINR: DAA >= DU, DAA >= MRC", receiver_ordering(seed)),
        check("block merge is reproducible", block_determinism(seed)),
    ]
}
