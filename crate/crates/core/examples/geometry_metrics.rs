//! Bures-Wasserstein geometry of isotropic Gaussians and of mixing measures.

use migvi::geometry::{
    bw_distance_sq_iso, delon_gap_check, geodesic_iso, kl_closed_form_iso, point_cloud_w2_sq, wbw_assignment,
    wbw_distance_sq,
};
use migvi::{IsotropicGaussian, MixtureState};

fn main() -> migvi::Result<()> {
    let p = IsotropicGaussian::from_slice(&[0.0, 0.0], 1.0)?;
    let q = IsotropicGaussian::from_slice(&[3.0, 4.0], 4.0)?;
    println!("BW²(p, q) = {}", bw_distance_sq_iso(&p, &q)?);
    println!(
        "KL(p ‖ q) = {:.6}  KL(q ‖ p) = {:.6}",
        kl_closed_form_iso(&p, &q)?,
        kl_closed_form_iso(&q, &p)?
    );
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let g = geodesic_iso(&p, &q, t)?;
        println!(
            "  geodesic t={t:.2}: mean {:?} variance {:.4}",
            g.mean().as_slice(),
            g.variance()
        );
    }

    let a = MixtureState::from_parts(&[vec![0.0, 0.0], vec![5.0, 0.0], vec![0.0, 5.0]], &[1.0, 0.5, 2.0])?;
    let b = MixtureState::from_parts(&[vec![0.0, 5.2], vec![0.1, 0.0], vec![4.8, 0.3]], &[1.5, 1.0, 0.5])?;
    println!("optimal matching {:?}", wbw_assignment(&a, &b)?.perm);
    println!("W²_bw = {:.6}", wbw_distance_sq(&a, &b)?);
    let report = delon_gap_check(&a, &b, point_cloud_w2_sq(&a, &b)?)?;
    println!(
        "W₂² of means = {:.6}, gap {:.4} ≤ bound {:.4}: {}",
        report.w2_sq, report.gap, report.bound, report.holds
    );
    Ok(())
}
