//! The enumeration `g_1, g_2, ...`, the pair sequence and `d_prob` between measures.

use cosofic::chabauty::{d_prob, d_pow, pair, transversal_measure, Enumeration, Sampler};
use cosofic::config;
use cosofic::goursat::GoursatTriplet;
use cosofic::perm_module::Submodule;
use cosofic::weiss::build_scheme;

fn main() -> cosofic::Result<()> {
    let cfg = config::flagship();
    let g = cfg.group.build()?;
    let mut en = Enumeration::new(&g);
    for (k, x) in en.prefix(5)?.iter().enumerate() {
        println!("g_{} = {}", k + 1, serde_json::to_string(x)?);
    }
    for i in 1..=6 {
        println!("pair {i}: {:?}", pair(i));
    }

    let pm = g.module();
    let a = GoursatTriplet::in_base(&g, Submodule::laurent_poly(pm, &[1, 1])?);
    let b = GoursatTriplet::in_base(&g, Submodule::laurent_poly(pm, &[1, 0, 1])?);
    let prefix = en.prefix(5)?.to_vec();
    println!("d_pow((1+t), (1+t^2)) = {}", d_pow(&prefix, |x| a.contains(&g, x), |x| b.contains(&g, x)));

    let scheme = build_scheme(&g, &a)?;
    for i in [1, 2, 4] {
        let st = scheme.stage(i)?;
        let mu = transversal_measure(&g, &st.f, &st.k_i, &Sampler::exact(), i, "d_prob")?;
        let nu = transversal_measure(&g, &st.f, &a, &Sampler::exact(), i, "d_prob")?;
        println!("stage {i}: d_prob(F*K, F*H) = {}", d_prob(&g, &mu, &nu, 128, &mut en)?);
    }
    Ok(())
}
