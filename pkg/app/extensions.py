from flask_smorest import Api

api = Api(spec_kwargs={
    "info": {"description": "Bland-Altman agreement estimation, agreement trees and simulation scenarios."},
})
