//! Structured meshes, refinement and element patches.

use lod_nls::mesh::{build_structured_mesh, refine};

fn main() -> lod_nls::Result<()> {
    let coarse = build_structured_mesh(8)?;
    let refmap = refine(&coarse, 4)?;
    let fine = refmap.fine();
    println!(
        "coarse: {} nodes, {} elements; fine: {} nodes, {} elements",
        coarse.n_nodes(),
        coarse.n_elements(),
        fine.n_nodes(),
        fine.n_elements()
    );

    // a corner element and one near the middle
    let centre = 2 * (4 * 8 + 4);
    for k in [0, centre] {
        println!("element {k}, vertices {:?}", coarse.element_coords(k));
        println!("  layers  elements  coarse nodes  interior fine nodes  whole mesh");
        for layers in 0..=8 {
            let p = refmap.patch(k, layers)?;
            println!(
                "  {layers:>6}  {:>8}  {:>12}  {:>19}  {}",
                p.elements.len(),
                p.coarse_nodes_in_patch.len(),
                p.interior_fine_nodes.len(),
                p.covers_mesh(&coarse)
            );
        }
    }

    let (parent, bary) = refmap.locate_fine_node(fine.n_nodes() / 2 + 3);
    println!("fine node {} lies in coarse element {parent} at barycentric {bary:.3?}", fine.n_nodes() / 2 + 3);
    Ok(())
}
