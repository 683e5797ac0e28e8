from django.contrib import admin

from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ['command', 'action', 'verdict', 'seed', 'created_at']
    list_filter = ['command', 'verdict', 'created_at']
    search_fields = ['action', 'verdict']
    readonly_fields = ['command', 'action', 'parameters', 'results', 'seed', 'verdict', 'get_created_at']
    exclude = ['created_at']

    def get_created_at(self, obj):
        return obj.created_at.strftime('%Y-%m-%d %H:%M:%S') if obj.created_at else '-'
    get_created_at.short_description = 'Created At'
    get_created_at.admin_order_field = 'created_at'
