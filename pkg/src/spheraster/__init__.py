"""Perspective-map baking and visual-sphere rasterization.

Bake a per-pixel direction map for any projection - the universal
radial/cylindrical model or one of the fixed generators - then
rasterize triangles, lines and particles against it with analytically
anti-aliased edges, in any projection at once.
"""

from .core import (
    AovSpec,
    bstep,
    discrete_fwidth,
    fwidth_grid,
    global_delta_map,
    gpstep,
    pstep,
    texture_to_view,
    view_to_texture,
)
from .projections import (
    CubemapProjection,
    DomeProjection,
    EquirectProjection,
    LensDistortionCoeffs,
    MirrorDomeProjection,
    NAMED_PROJECTIONS,
    PanoramaProjection,
    PerspectiveMap,
    PerspectiveParams,
    Projection,
    ProjectionMappingProjection,
    RectilinearProjection,
    ScreenArrayProjection,
    UniversalProjection,
    VrProjection,
    bake_map,
    brown_conrady,
    clamp_params,
    cubemap_face_vector,
    omega_max,
    orientation_matrix,
    pixel_grid,
    radial_curve,
    remap_2d_to_2d,
    universal_2d_to_3d,
    universal_3d_to_2d,
)
from .raster import (
    CameraTriangle,
    CameraVertex,
    FragmentBuffers,
    ParallaxProfile,
    Particle,
    RenderResult,
    apply_parallax,
    barycentric,
    composite_fragment,
    edge_matrix,
    interpolate_fragment,
    rasterize_line,
    rasterize_particle,
    rasterize_polygon,
    rasterize_triangle,
    render_scene,
    smallest_circle,
    subdivide_wide,
)
from .sceneio import (
    ObjMesh,
    Scene,
    fan_triangles,
    load_map,
    load_obj,
    parse_scene,
    projection_from_dict,
    read_pfm,
    save_map,
    save_map_preview,
    save_pass,
    write_pfm,
)

__version__ = "0.1.0"
