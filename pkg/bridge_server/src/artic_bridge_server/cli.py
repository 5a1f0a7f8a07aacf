"""Command-line entry point: serve protocol v1 over stdio or a local socket."""

from __future__ import annotations

import argparse
import configparser
import logging
import sys

from .adapters import ChannelMap
from .server import ServerConfig, serve_socket, serve_stdio


def load_server_config(path: str | None, models_override: str | None = None) -> ServerConfig:
    config = ServerConfig()
    if path:
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.read(path)
        if parser.has_section("models"):
            section = parser["models"]
            config.models = section.get("kind", config.models)
            config.model_settings = {
                key: value for key, value in section.items() if key != "kind"
            }
        if parser.has_section("channels"):
            section = parser["channels"]
            order = tuple(
                part.strip().upper()
                for part in section.get("order", "TD,TB,TT,LI,UL,LL").split(",")
            )
            config.channel_map = ChannelMap(
                articulator_order=order,
                loudness_scale=section.getfloat("loudness_scale", 1.0 / 3.0),
                loudness_offset=section.getfloat("loudness_offset", 0.0),
            )
            config.channel_map.validate()
        if parser.has_section("prompts"):
            config.prompts = dict(parser["prompts"])
    if models_override:
        config.models = models_override
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="artic-bridge-server",
        description="Decode-and-perceive protocol v1 server around pretrained models",
    )
    parser.add_argument("--config", default=None, help="INI config (models, channels, prompts)")
    parser.add_argument("--models", choices=("pretrained", "fake"), default=None,
                        help="override [models] kind")
    parser.add_argument("--socket", type=int, metavar="PORT", default=None,
                        help="serve on a local TCP port instead of stdio")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--max-connections", type=int, default=None)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    config = load_server_config(args.config, args.models)
    if args.socket is not None:
        serve_socket(args.host, args.socket, config, args.max_connections)
    else:
        serve_stdio(config)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
