use oosembed::oracle::pca_hyperplane_demo;

fn main() {
    let demo = pca_hyperplane_demo();
    for s in &demo.stationary {
        println!(
            "theta {:+.6}  cos {:+.6}  y {:+.4}  f {:.4}  {:?}  new point at {:+.4}",
            s.theta,
            s.theta.cos(),
            s.y,
            s.value,
            s.kind,
            s.out_of_sample
        );
    }
}
