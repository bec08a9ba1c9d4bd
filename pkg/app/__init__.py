from flask import Flask
from .extensions import api
from .config import Config
from common import configure_logging, load_env

def create_app(config_object: type[Config] | None = None):
    app = Flask(__name__)
    configure_logging(load_env())

    app.config.from_object(config_object or Config)

    # Initialize extensions
    api.init_app(app)

    # Register blueprints (import here to avoid circulars)
    from coat_tree.coat_tree import bp as coat_bp
    api.register_blueprint(coat_bp, url_prefix="/coat")

    from scenario_generator.scenario_generator import bp as scenario_bp
    api.register_blueprint(scenario_bp, url_prefix="/scenario")

    @app.get("/")
    def health():
        return {"status": "ok"}

    return app
