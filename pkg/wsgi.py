from app import create_app

# gunicorn --bind 0.0.0.0:8000 wsgi:app
app = create_app()
