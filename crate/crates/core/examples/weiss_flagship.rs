//! Stages of the controlled approximation for `H = ideal(1 + t)` and its stage checks.

use cosofic::config;
use cosofic::weiss::{build_scheme, transversal_check, verify_stage};

fn main() -> cosofic::Result<()> {
    for name in ["flagship", "trinomial", "shortcut"] {
        let cfg = config::preset(name)?;
        let g = cfg.group.build()?;
        let h = cfg.subgroup.build(&g)?;
        let scheme = build_scheme(&g, &h)?;
        println!("{name}: k = {}, shortcut = {}", scheme.k(), scheme.uses_shortcut());
        for i in 1..=6 {
            let st = scheme.stage(i)?;
            let rep = verify_stage(&scheme, &st, 500, 1)?;
            let cert = transversal_check(&scheme, &st)?;
            println!(
                "  i = {i}: N_i = {:<40} |F_i| = {:<6} violations = {} {:?}",
                st.n_i_sub.describe(),
                st.f.size(),
                rep.violations(),
                cert
            );
        }
    }
    Ok(())
}
