//! Bundled test scenes.

use super::{parse_scene, Scene};

macro_rules! cornell_shell {
    ($floor:literal, $back:literal) => {
        concat!(
            "material white diffuse 0.75 0.75 0.75\n",
            "material red diffuse 0.75 0.2 0.2\n",
            "material green diffuse 0.2 0.75 0.2\n",
            "material lamp diffuse 0.8 0.8 0.8 emit 16 16 16\n",
            "# floor, ceiling, back, left, right; the front is open\n",
            "tri -1 0 -1 -1 0 1 1 0 1 ", $floor, "\n",
            "tri -1 0 -1 1 0 1 1 0 -1 ", $floor, "\n",
            "tri -1 2 -1 1 2 -1 1 2 1 white\n",
            "tri -1 2 -1 1 2 1 -1 2 1 white\n",
            "tri -1 0 -1 1 0 -1 1 2 -1 ", $back, "\n",
            "tri -1 0 -1 1 2 -1 -1 2 -1 ", $back, "\n",
            "tri -1 0 -1 -1 2 -1 -1 2 1 red\n",
            "tri -1 0 -1 -1 2 1 -1 0 1 red\n",
            "tri 1 0 -1 1 0 1 1 2 1 green\n",
            "tri 1 0 -1 1 2 1 1 2 -1 green\n",
            "arealight -0.25 1.99 -0.25 0.5 0 0 0 0 0.5 lamp\n",
            "camera 0 1 3.5 0 1 0 0 1 0 39\n",
        )
    };
}

/// Diffuse-only Cornell box with two blocks.
pub const BOX: &str = concat!(
    "# diffuse Cornell box\n",
    cornell_shell!("white", "white"),
    "box -0.7 0 -0.6 -0.1 1.2 0 white\n",
    "box 0.15 0 0 0.7 0.6 0.55 white\n",
);

/// Two metal balls on the left, four glass balls on the right.
pub const BOX_WITH_BALLS: &str = concat!(
    "# Cornell box with metal and glass balls\n",
    "material metal mirror 0.9 0.9 0.9\n",
    "material glass glass 1 1 1 1.5\n",
    cornell_shell!("white", "white"),
    "sphere -0.6 0.3 -0.4 0.3 metal\n",
    "sphere -0.55 0.25 0.45 0.25 metal\n",
    "sphere 0.3 0.2 -0.5 0.2 glass\n",
    "sphere 0.7 0.2 -0.2 0.2 glass\n",
    "sphere 0.35 0.2 0.2 0.2 glass\n",
    "sphere 0.6 0.55 0.45 0.15 glass\n",
);

/// Diffuse and mildly glossy objects in a room lit by one small lamp that
/// faces the ceiling.
pub const DIFFUSE_ROOM: &str = "\
# room lit indirectly by a small upward-facing lamp
material wall diffuse 0.7 0.68 0.62
material floor diffuse 0.5 0.45 0.4
material sofa diffuse 0.3 0.35 0.6
material satin phong 0.6 0.55 0.5 12
material lamp diffuse 0.8 0.8 0.8 emit 60 55 45
tri -2 0 -2 -2 0 2 2 0 2 floor
tri -2 0 -2 2 0 2 2 0 -2 floor
tri -2 2.5 -2 2 2.5 -2 2 2.5 2 wall
tri -2 2.5 -2 2 2.5 2 -2 2.5 2 wall
tri -2 0 -2 2 0 -2 2 2.5 -2 wall
tri -2 0 -2 2 2.5 -2 -2 2.5 -2 wall
tri -2 0 -2 -2 2.5 -2 -2 2.5 2 wall
tri -2 0 -2 -2 2.5 2 -2 0 2 wall
tri 2 0 -2 2 0 2 2 2.5 2 wall
tri 2 0 -2 2 2.5 2 2 2.5 -2 wall
tri -2 0 2 2 2.5 2 2 0 2 wall
tri -2 0 2 -2 2.5 2 2 2.5 2 wall
box -1.6 0 -1.9 1.2 0.45 -1.1 sofa
box -1.6 0.45 -1.9 1.2 1.0 -1.6 sofa
box 1.3 0 -1.9 1.9 1.6 -1.4 wall
box -0.5 0 -0.4 0.5 0.4 0.3 satin
sphere 0.0 0.65 -0.05 0.25 satin
sphere -1.3 0.3 0.6 0.3 satin
box 1.45 1.6 -1.8 1.75 1.62 -1.5 wall
arealight 1.5 1.63 -1.75 0 0 0.2 0.2 0 0 lamp
camera 0 1.3 1.9 0 0.7 -1 0 1 0 60
";

/// Mirror back wall, a mirror cube and three specular balls.
pub const MIRROR_WALL: &str = concat!(
    "# Cornell box with a mirror back wall\n",
    "material mirror mirror 0.95 0.95 0.95\n",
    "material glass glass 1 1 1 1.5\n",
    "material chrome mirror 0.8 0.8 0.85\n",
    cornell_shell!("white", "mirror"),
    "box -0.75 0 -0.6 -0.25 0.5 -0.1 chrome\n",
    "sphere 0.45 0.3 -0.35 0.3 glass\n",
    "sphere -0.1 0.2 0.35 0.2 chrome\n",
    "sphere 0.6 0.2 0.5 0.2 glass\n",
);

/// Glossy floor, chrome balls and a glass cube, lit by an area light and a
/// directional light.
pub const GLOSSY_FLOOR: &str = "\
# open stage with a glossy floor
material floor phong 0.8 0.8 0.8 200
material wall diffuse 0.6 0.6 0.6
material chrome mirror 0.9 0.9 0.9
material glass glass 1 1 1 1.5
material orange diffuse 0.8 0.4 0.1
material lamp diffuse 0.8 0.8 0.8 emit 12 12 12
tri -3 0 -2 -3 0 3 3 0 3 floor
tri -3 0 -2 3 0 3 3 0 -2 floor
tri -3 0 -2 3 0 -2 3 3 -2 wall
tri -3 0 -2 3 3 -2 -3 3 -2 wall
tri -3 0 -2 -3 3 -2 -3 3 3 wall
tri -3 0 -2 -3 3 3 -3 0 3 wall
box -0.4 0 -0.2 0.4 0.8 0.6 glass
sphere -0.2 0.35 -1.2 0.35 orange
sphere 0.5 0.3 -1.0 0.3 chrome
sphere -1.4 0.4 0.2 0.4 chrome
arealight -1 2.9 -1.5 2 0 0 0 0 1 lamp
dirlight 0.5 -1 -0.6 1.5 1.4 1.2
camera 0 1.2 4.5 0 0.5 0 0 1 0 45
";

/// Closed cube of inward-facing emitters with diffuse albedo 0.5 and unit
/// emission: every point sees radiance `1 / (1 - 0.5) = 2`.
pub const WHITE_FURNACE: &str = "\
# closed furnace: six emissive diffuse faces
material wall diffuse 0.5 0.5 0.5 emit 1 1 1
arealight -1 -1 -1 0 0 2 2 0 0 wall
arealight -1 1 -1 2 0 0 0 0 2 wall
arealight -1 -1 -1 0 2 0 0 0 2 wall
arealight 1 -1 -1 0 0 2 0 2 0 wall
arealight -1 -1 -1 2 0 0 0 2 0 wall
arealight -1 -1 1 0 2 0 2 0 0 wall
camera 0 0 0.5 0 0 -1 0 1 0 70
";

/// Closed unit cube with a ceiling lamp.
pub const UNIT_BOX: &str = "\
# closed unit cube
material white diffuse 0.6 0.6 0.6
material lamp diffuse 0.5 0.5 0.5 emit 5 5 5
tri 0 0 0 1 0 0 1 0 1 white
tri 0 0 0 1 0 1 0 0 1 white
tri 0 1 0 0 1 1 1 1 1 white
tri 0 1 0 1 1 1 1 1 0 white
tri 0 0 0 0 1 0 1 1 0 white
tri 0 0 0 1 1 0 1 0 0 white
tri 0 0 1 1 0 1 1 1 1 white
tri 0 0 1 1 1 1 0 1 1 white
tri 0 0 0 0 0 1 0 1 1 white
tri 0 0 0 0 1 1 0 1 0 white
tri 1 0 0 1 1 0 1 1 1 white
tri 1 0 0 1 1 1 1 0 1 white
arealight 0.4 0.999 0.4 0.2 0 0 0 0 0.2 lamp
camera 0.5 0.5 0.95 0.5 0.5 0 0 1 0 60
";

/// Every bundled scene by name. The first four are the comparison scenes.
pub const FIXTURES: &[(&str, &str)] = &[
    ("box-with-balls", BOX_WITH_BALLS),
    ("diffuse-room", DIFFUSE_ROOM),
    ("mirror-wall", MIRROR_WALL),
    ("glossy-floor", GLOSSY_FLOOR),
    ("box", BOX),
    ("white-furnace", WHITE_FURNACE),
    ("unit-box", UNIT_BOX),
];

pub const COMPARISON_SCENES: [&str; 4] =
    ["box-with-balls", "diffuse-room", "mirror-wall", "glossy-floor"];

pub fn source(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Parses a bundled scene; panics on an unknown name.
pub fn load(name: &str) -> Scene {
    let text = source(name).unwrap_or_else(|| panic!("no fixture named '{name}'"));
    parse_scene(text).unwrap_or_else(|e| panic!("fixture '{name}': {e}"))
}
