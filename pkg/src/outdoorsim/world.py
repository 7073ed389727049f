"""The simulated world: clock, sky, weather, particles, water, paged layers.

``World.step`` advances everything by one real-time interval;
``World.render`` draws the current state. Rendering never changes
simulation state, so frames can be re-rendered at any resolution.
"""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .assets import RgbaMap, Texture, load_graymap, load_rgbamap, load_texture
from .camera import Camera, CameraPath, Keyframe, sample_camera
from .clock import GameClock, advance_clock
from .config import SceneConfig
from .mathutil import normalize
from .meshes import make_prototype
from .paging import LOD, PagedGeometry, PagedLayer, impostor_billboard, transform_instances
from .particles import ParticleManager, lightning_desc, precipitation_desc
from .render.frame import composite_particles, render_opaque, tone_map
from .render.lighting import DirectionalLight, LightSet, Material, vertex_light
from .render.raster import DrawBatch
from .render.shading import shade_terrain_pixel
from .rng import RngStreams
from .sky import SkyConfig, compute_sky_state, default_catalog, julian_day, shade_skydome
from .terrain import HeightField, TerrainMaterial, build_mesh, height_at, height_range
from .water import (WaterCoupling, WaterGrid, WaterShading, bank_from_dict, bank_to_dict, build_grid,
                    default_wave_bank, shade_water, surface_height, update_caelum_on_water, WaveBank,
                    wind_multiplier)
from .weather import (WeatherConfig, cloud_opacity, initial_weather, precipitation_volume, step_weather, weather_from_dict,
                      weather_to_dict)

# flat stand-ins when a terrain block names no textures: grass, sand, rock, dirt
DEFAULT_TEXTURE_COLORS = ((0.30, 0.45, 0.18), (0.76, 0.70, 0.50), (0.45, 0.43, 0.40), (0.42, 0.32, 0.20))
FLASH_AMBIENT = np.array([1.2, 1.25, 1.45])
PREWARM_MAX = 90.0


def _flat_texture(rgb) -> Texture:
    return Texture(RgbaMap(np.broadcast_to(np.array([*rgb, 1.0]), (2, 2, 4)).copy()))


def _material(tc, w: int, h: int) -> TerrainMaterial:
    textures = [load_texture(p) for p in tc.textures] if tc.textures else [_flat_texture(c) for c in DEFAULT_TEXTURE_COLORS]
    if tc.coverage is not None:
        coverage = load_rgbamap(tc.coverage)
    else:
        cov = np.zeros((2, 2, 4))
        cov[..., 0] = 1.0
        coverage = RgbaMap(cov)
    color = load_rgbamap(tc.color_map) if tc.color_map is not None else RgbaMap(np.ones((2, 2, 4)))
    return TerrainMaterial(textures, coverage, color, tc.parallax_scale, tc.parallax_bias, tc.parallax_iterations,
                           tc.tiling, tc.shininess, tc.specular)


class World:
    def __init__(self, cfg: SceneConfig):
        self.cfg = cfg
        self.seed = cfg.weather.seed
        self.streams = RngStreams(self.seed)
        self.sky_cfg = SkyConfig(cfg.latitude, cfg.longitude)
        # calendar start is local mean solar time unless flagged as UTC
        offset = 0.0 if cfg.start_is_utc else cfg.longitude / 15.0 / 24.0
        self.start_jd = julian_day(cfg.start) - offset
        self.catalog = default_catalog()

        self.hf = None
        self.mesh = None
        self.material = None
        if cfg.terrain is not None:
            tc = cfg.terrain
            src = load_graymap(tc.heightmap)
            origin = tc.origin
            if origin is None:
                origin = (-(src.width - 1) * tc.spacing / 2.0, -(src.height - 1) * tc.spacing / 2.0)
            self.hf = HeightField(src, tc.spacing, tc.vertical_scale, origin)
            self.mesh = build_mesh(self.hf)
            self.material = _material(tc, src.width, src.height)

        self.weather_cfg = WeatherConfig(snow_enabled=cfg.weather.snow, initial=cfg.weather.initial, seed=self.seed)
        self.weather = initial_weather(self.weather_cfg, self.streams["weather"], cfg.weather.initial, 0.0)
        self.particles = ParticleManager(self.seed)
        self.precip_id = None

        wc = cfg.water
        self.water_grid = WaterGrid(wc.grid, wc.resolution, wc.base_level, wc.rect, wc.radius, wc.rings)
        if wc.waves is not None:
            w = wc.waves
            self.bank = WaveBank(tuple(w["amplitude"]), tuple(w["wavelength"]), tuple(tuple(d) for d in w["direction"]),
                                 tuple(w["phase"]), tuple(w["steepness"]))
        else:
            self.bank = default_wave_bank()
        # start the sea already settled to the initial wind
        self.bank = replace(self.bank, multiplier=wind_multiplier(self.weather.wind.speed))
        self.water_shading = WaterShading(wc.deep, wc.shallow, wc.depth_falloff, wc.foam_threshold, shininess=wc.shininess)
        self.coupling = WaterCoupling(0.25, cfg.time_scale)

        self.layers = []
        for lc in cfg.layers:
            self.layers.append(PagedLayer(
                lc.name, tuple(make_prototype(m) for m in lc.meshes), load_graymap(lc.density), self.hf.extent,
                lc.instances_per_texel, lc.scale, lc.lod, lc.page_size, lc.grass))
        self.paged = PagedGeometry(self.layers, self.seed, self.ground, lambda r: height_range(self.hf, r))

        cam = cfg.camera
        self.path = CameraPath([Keyframe(k.time, k.position, k.orientation) for k in cam.keys], cam.fov_y, cam.near, cam.far)
        self.clock = GameClock(0.0, 0.0, cfg.time_scale)
        self.frame = 0
        self.last_game_dt = 0.0
        self._update_precipitation(self.camera())
        if self.precip_id is not None:
            # run until the first drops have fallen from the box top to eye level
            wind = self.weather.wind.velocity
            box = precipitation_volume(self.camera().position)
            fall = box.half_extent[1] + box.center[1] - self.camera().position[1]
            seconds = min(fall / max(self.weather.precipitation.fall_speed, 0.5), PREWARM_MAX)
            for _ in range(int(math.ceil(seconds / 0.1))):
                self.particles.step(0.1, wind, self.ground)

    # -- queries -------------------------------------------------------------

    def ground(self, x, z):
        if self.hf is None:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(z)).shape)
        return height_at(self.hf, x, z)

    def camera(self) -> Camera:
        return sample_camera(self.path, self.clock.real_elapsed)

    @property
    def game_time(self) -> float:
        return self.clock.game_time

    @property
    def julian_day(self) -> float:
        return self.start_jd + self.clock.game_time / 86400.0

    def sky_state(self):
        return compute_sky_state(self.sky_cfg, self.julian_day)

    # -- simulation ------------------------------------------------------------

    def step(self, real_dt: float) -> list:
        """Advance by ``real_dt`` real seconds; returns new thunder events."""
        before = self.clock.game_time
        self.clock = advance_clock(self.clock, real_dt)
        gdt = self.clock.game_time - before
        cam = self.camera()
        new = step_weather(self.weather_cfg, self.weather, gdt, self.streams["weather"], cam.position, self.ground)
        for e in new:
            self.particles.create_system(lightning_desc(e.position))
        self._update_precipitation(cam)
        self.particles.step(gdt, self.weather.wind.velocity, self.ground)
        self.bank = self.coupling.step(self.bank, self.weather.wind.velocity, gdt)
        self.frame += 1
        self.last_game_dt = gdt
        return new

    def _update_precipitation(self, cam) -> None:
        p = self.weather.precipitation
        if p.kind == "none" or p.intensity <= 0.0:
            if self.precip_id is not None:
                self.particles.destroy_system(self.precip_id)
                self.precip_id = None
            return
        box = precipitation_volume(cam.position)
        desc = precipitation_desc(p.kind, p.intensity, p.fall_speed, self.weather.wind.velocity, box)
        sys = self.particles.systems.get(self.precip_id)
        if sys is not None and sys.desc.name != desc.name:
            self.particles.destroy_system(self.precip_id)
            sys = None
        if sys is None:
            self.precip_id = self.particles.create_system(desc)
        else:
            sys.desc = desc

    # -- lighting ----------------------------------------------------------------

    def lit_sky(self):
        """Sky state with cloud dimming and the lightning flash applied."""
        sky = self.sky_state()
        cover = max((l.coverage for l in self.weather.layers), default=0.0)
        ambient = sky.ambient * (1.0 - 0.35 * cover)
        window = max(self.weather_cfg.flash_duration, self.last_game_dt)
        if self.weather.flash(self.clock.game_time, window):
            ambient = ambient + FLASH_AMBIENT
        dim = 1.0 - 0.75 * cover
        return replace(sky, ambient=ambient, sun_intensity=sky.sun_intensity * dim, moon_intensity=sky.moon_intensity * dim)

    @staticmethod
    def lights_for(sky) -> LightSet:
        ls = []
        if sky.sun_intensity > 0.0:
            ls.append(DirectionalLight(tuple(float(v) for v in normalize(sky.sun_dir)), tuple(float(c) for c in sky.sun_color), float(sky.sun_intensity)))
        if sky.moon_intensity > 0.0:
            ls.append(DirectionalLight(tuple(float(v) for v in normalize(sky.moon_dir)), tuple(float(c) for c in sky.moon_color), float(sky.moon_intensity)))
        return LightSet(tuple(float(a) for a in sky.ambient), tuple(ls))

    def sky_radiance(self, sky, dirs):
        rgb = shade_skydome(sky, dirs, self.catalog)
        op = cloud_opacity(self.weather.layers, dirs, self.weather_cfg.uv_per_meter)[..., None]
        cloud = sky.ambient * 0.8 + sky.sun_color * (0.08 * sky.sun_intensity)
        return rgb * (1.0 - op) + cloud * op

    # -- rendering ---------------------------------------------------------------

    def build_batches(self, cam: Camera, width: int, height: int, sky, lights: LightSet, water: bool = True) -> list:
        eye = cam.position
        batches = []
        if self.mesh is not None:
            mat = self.material

            def shade_terrain(a):
                return shade_terrain_pixel(mat, a["uv"], a["normal"], lights, eye, a["pos"])

            m = self.mesh
            batches.append(DrawBatch("terrain", m.positions, m.triangles,
                                     {"pos": m.positions, "normal": m.normals, "uv": m.uvs}, shade_terrain))
        if water and self.cfg.water.enabled:
            wm = build_grid(self.water_grid, cam, width / height)
            shading = update_caelum_on_water(self.water_shading, sky)
            bank, t, base = self.bank, self.clock.game_time, self.water_grid.base_level
            diffuse = [(np.asarray(l.direction), np.asarray(l.color) * l.intensity) for l in lights.lights]

            def shade_sea(a):
                p = a["pos"]
                disp, n = surface_height(bank, p[:, 0], p[:, 2], t)
                depth = np.maximum(base - self.ground(p[:, 0], p[:, 2]), 0.0)
                view = normalize(eye - p)
                return shade_water(shading, n, depth, view, disp[:, 1], lights.ambient, diffuse,
                                   lambda d: self.sky_radiance(sky, d))

            batches.append(DrawBatch("water", wm.positions, wm.triangles, {"pos": wm.positions}, shade_sea, cull=False))
        if self.layers:
            wind = self.weather.wind.velocity
            t = self.clock.game_time
            for (inst, lod), layer in zip(self.paged.visible_instances(cam, width, height), self.layers):
                for mid, proto in enumerate(layer.meshes):
                    on_mesh = inst.mesh == mid
                    for cls in (LOD.BATCH, LOD.WIND, LOD.GRASS):
                        idx = np.nonzero(on_mesh & (lod == cls))[0]
                        if len(idx) == 0:
                            continue
                        pos, nrm = transform_instances(proto, inst, idx, wind if cls != LOD.BATCH else None, t)
                        if proto.double_sided:
                            nrm = np.zeros_like(nrm)
                            nrm[..., 1] = 1.0
                        alb = np.broadcast_to(proto.albedo, pos.shape)
                        col = vertex_light(pos, nrm, alb, lights, eye, Material(specular=0.0))
                        n = pos.shape[0] * pos.shape[1]
                        batches.append(DrawBatch(f"{layer.name}-{proto.name}-{cls.name.lower()}", pos.reshape(-1, 3),
                                                 np.arange(n).reshape(-1, 3), {"color": col.reshape(-1, 3)},
                                                 cull=not proto.double_sided))
                    idx = np.nonzero(on_mesh & (lod == LOD.IMPOSTOR))[0]
                    if len(idx):
                        q = impostor_billboard(proto, inst, idx, eye, lights)
                        k = 4 * np.arange(len(idx))[:, None]
                        tris = np.concatenate([k + [0, 1, 2], k + [0, 2, 3]], axis=1).reshape(-1, 3)
                        batches.append(DrawBatch(f"{layer.name}-{proto.name}-impostor", q.corners.reshape(-1, 3), tris,
                                                 {"color": np.repeat(q.color, 4, axis=0)}))
        return batches

    def render(self, width: int | None = None, height: int | None = None, threads: int = 1,
               water: bool = True, batch_order=None):
        """Render the current state; returns (framebuffer, 8-bit image)."""
        width = width or self.cfg.render.width
        height = height or self.cfg.render.height
        cam = self.camera()
        sky = self.lit_sky()
        lights = self.lights_for(sky)
        background = self.sky_radiance(sky, cam.pixel_rays(width, height))
        batches = self.build_batches(cam, width, height, sky, lights, water)
        if batch_order is not None:
            batches = [batches[i] for i in batch_order]
        fb = render_opaque(batches, cam, width, height, background, threads)
        pos, size, rgba, emi = self.particles.billboard_arrays(cam)
        light_rgb = np.asarray(lights.ambient) + sum((np.asarray(l.color) * l.intensity * 0.6 for l in lights.lights), np.zeros(3))
        composite_particles(fb, cam, pos, size, rgba, emi, light_rgb)
        return fb, tone_map(fb.hdr, self.cfg.render.exposure)

    # -- state -------------------------------------------------------------------

    def get_state(self) -> dict:
        return {
            "seed": self.seed,
            "clock": [self.clock.real_elapsed, self.clock.game_time, self.clock.time_scale],
            "frame": self.frame,
            "last_game_dt": self.last_game_dt,
            "weather": weather_to_dict(self.weather),
            "rng": self.streams.get_state(),
            "particles": self.particles.get_state(),
            "precip_id": self.precip_id,
            "water": bank_to_dict(self.bank),
            "water_pending": self.coupling.pending,
        }

    def set_state(self, st: dict) -> None:
        if st["seed"] != self.seed:
            raise ValueError(f"state was saved with seed {st['seed']}, scene uses {self.seed}")
        real, game, scale = st["clock"]
        self.clock = GameClock(real, game, scale)
        self.coupling = WaterCoupling(0.25, scale)
        self.coupling.pending = st["water_pending"]
        self.frame = st["frame"]
        self.last_game_dt = st["last_game_dt"]
        self.weather = weather_from_dict(st["weather"])
        self.streams.set_state(st["rng"])
        self.particles = ParticleManager.from_state(st["particles"])
        self.precip_id = st["precip_id"]
        self.bank = bank_from_dict(st["water"])
