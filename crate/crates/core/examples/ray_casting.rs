//! Cell sets of one reflected path and how much of the prior supports it.
//!
//!     cargo run --example ray_casting

use mpslam::grid::{path_validity_message, trace_ray, CellClassifier, CellSets, GridSpec, OccupancyGrid};
use mpslam::propagation::{solve_path, Surface};
use mpslam::Vec2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GridSpec::new(Vec2::new(-2.0, -1.0), 0.2, 20, 12)?;
    let wall = Surface::new(Vec2::new(-2.0, 1.1), Vec2::new(2.0, 1.1), 0.7);
    let (agent, pa) = (Vec2::new(-1.3, -0.5), Vec2::new(1.5, -0.4));

    let direct = trace_ray(&spec, agent, pa);
    println!("line of sight crosses {} cells", direct.len());

    let path = solve_path(agent, 0.0, pa, &[wall]).ok_or("no reflection")?;
    println!(
        "reflection at ({:.2}, {:.2}), length {:.3} m, aod {:.1} deg, aoa {:.1} deg",
        path.vertices()[1].x,
        path.vertices()[1].y,
        path.length,
        path.aod.to_degrees(),
        path.aoa.to_degrees()
    );

    let mut sets = CellSets::default();
    CellClassifier::for_grid(&spec).classify_into(&spec, path.vertices(), &mut sets);
    println!("{} traversed cells, {} hit cells", sets.traversed.len(), sets.hit.len());
    for row in (0..spec.ny).rev() {
        let line: String = (0..spec.nx)
            .map(|col| {
                let i = spec.index(row, col);
                if sets.hit.contains(&i) {
                    '#'
                } else if sets.traversed.contains(&i) {
                    '.'
                } else {
                    ' '
                }
            })
            .collect();
        println!("|{line}|");
    }

    let unknown = OccupancyGrid::uniform(&spec, 0.5);
    let mut mapped = OccupancyGrid::uniform(&spec, 0.1);
    for i in trace_ray(&spec, wall.p1, wall.p2) {
        mapped.p_occ[i] = 0.9;
    }
    println!("validity under a flat 0.5 prior: {:.3e}", path_validity_message(&unknown, &sets));
    println!("validity with the wall mapped:   {:.3e}", path_validity_message(&mapped, &sets));
    Ok(())
}
