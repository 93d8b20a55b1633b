//! Folner, centered, tempered and adapted curves along the flagship stages.

use cosofic::chabauty::{adapted_statistic, centered_defect, folner_defect, tempered_ratio};
use cosofic::config;
use cosofic::weiss::build_scheme;

fn main() -> cosofic::Result<()> {
    let cfg = config::flagship();
    let g = cfg.group.build()?;
    let scheme = build_scheme(&g, &cfg.subgroup.build(&g)?)?;
    let t = g.from_q(&[1]);
    let b = cfg.words.iter().find(|w| w.label == "b").expect("preset word").build(&g)?;
    println!("{:>3} {:>10} {:>10} {:>10} {:>10} {:>10}", "i", "folner t", "folner b", "centered 1", "tempered", "adapted t");
    let mut prefix = Vec::new();
    for i in 1..=10 {
        let st = scheme.stage(i)?;
        prefix.push(st.i_set.clone());
        println!(
            "{:>3} {:>10} {:>10} {:>10} {:>10} {:>10}",
            i,
            folner_defect(&g, &st.f, &t).to_string(),
            folner_defect(&g, &st.f, &b).to_string(),
            centered_defect(g.q(), &st.i_set, &[1]).to_string(),
            tempered_ratio(g.q(), &prefix).to_string(),
            adapted_statistic(&g, &st.f, &st.i_set, &t, &cfg.phi[0]).to_string()
        );
    }
    Ok(())
}
